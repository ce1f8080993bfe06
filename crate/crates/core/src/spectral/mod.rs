//! Periodic grids, field containers and Fourier-multiplier operators.

mod field;
mod grid;
mod ops;

pub use field::{RealField2D, SpectralField2D};
pub use grid::{DirectDftProvider, Grid2D, RustFftProvider, TransformProvider};
pub use ops::{
    apply_fractional_laplacian, apply_multiplier, dealias, dealias_in_place, dealias_keeps, dyadic_block,
    dyadic_block_spectral, fractional_laplacian_in_place, fractional_semigroup, fractional_symbol, in_dyadic_block,
    max_dyadic_index, multiply_in_place, partial1, partial1_in_place, partial2, partial2_in_place, semigroup_factors,
    SymbolId,
};
