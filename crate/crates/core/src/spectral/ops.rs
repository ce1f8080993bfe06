//! Fourier-multiplier operators on periodic fields.
//!
//! Every operator works coefficient-wise after a forward transform. Symbols
//! that are odd in one wavenumber component are set to zero on that
//! component's Nyquist line, otherwise the Nyquist mode (its own conjugate
//! partner) would pick up an imaginary part and the output would not be real.

use rustfft::num_complex::Complex64;

use super::field::{RealField2D, SpectralField2D};
use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Zero-order and smoothing multipliers used by the velocity laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolId {
    /// `R1^2 R2^2`: `k1^2 k2^2 / |k|^4`.
    RieszSq,
    /// `R1 R2^2 |D|^-1`: `-i k1 k2^2 / |k|^4`.
    VelTheta,
    /// First SQG velocity component `-R2`: `-i k2 / |k|`.
    SqgU1,
    /// Second SQG velocity component `R1`: `i k1 / |k|`.
    SqgU2,
    /// Inverse of `d/dx1` on modes with `k1 != 0`: `-i / k1`.
    InvD1,
}

impl SymbolId {
    pub const ALL: [SymbolId; 5] =
        [SymbolId::RieszSq, SymbolId::VelTheta, SymbolId::SqgU1, SymbolId::SqgU2, SymbolId::InvD1];

    /// Symbol at the continuous wavenumber `(k1, k2)`; zero at the origin.
    pub fn eval(self, k1: f64, k2: f64) -> Complex64 {
        let r2 = k1 * k1 + k2 * k2;
        if r2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match self {
            SymbolId::RieszSq => Complex64::new(k1 * k1 * k2 * k2 / (r2 * r2), 0.0),
            SymbolId::VelTheta => Complex64::new(0.0, -k1 * k2 * k2 / (r2 * r2)),
            SymbolId::SqgU1 => Complex64::new(0.0, -k2 / r2.sqrt()),
            SymbolId::SqgU2 => Complex64::new(0.0, k1 / r2.sqrt()),
            SymbolId::InvD1 => {
                if k1 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / k1)
                }
            }
        }
    }

    fn odd_in_k1(self) -> bool {
        matches!(self, SymbolId::VelTheta | SymbolId::SqgU2 | SymbolId::InvD1)
    }

    fn odd_in_k2(self) -> bool {
        matches!(self, SymbolId::SqgU1)
    }

    /// Symbol as applied on the grid, including the Nyquist convention.
    pub fn on_grid(self, grid: &Grid2D, j1: usize, j2: usize) -> Complex64 {
        if (self.odd_in_k1() && grid.is_nyquist1(j1)) || (self.odd_in_k2() && grid.is_nyquist2(j2)) {
            return Complex64::new(0.0, 0.0);
        }
        self.eval(grid.k1()[j1], grid.k2()[j2])
    }

    pub fn name(self) -> &'static str {
        match self {
            SymbolId::RieszSq => "RieszSq",
            SymbolId::VelTheta => "VelTheta",
            SymbolId::SqgU1 => "SQGu1",
            SymbolId::SqgU2 => "SQGu2",
            SymbolId::InvD1 => "InvD1",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2]")));
    }
    Ok(())
}

/// Multiplies coefficients in place by `sym` evaluated on the grid.
pub fn multiply_in_place(field: &mut SpectralField2D, sym: SymbolId) {
    let grid = field.grid().clone();
    let coeffs = field.coeffs_mut();
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            coeffs[grid.index(j1, j2)] *= sym.on_grid(&grid, j1, j2);
        }
    }
}

pub fn apply_multiplier(f: &RealField2D, sym: SymbolId) -> RealField2D {
    let mut s = f.to_spectral();
    multiply_in_place(&mut s, sym);
    s.to_real()
}

/// The symbol of `|D|^alpha` on the grid, one entry per coefficient.
pub fn fractional_symbol(grid: &Grid2D, alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            let k = grid.kmag(j1, j2);
            out.push(if k == 0.0 { 0.0 } else { k.powf(alpha) });
        }
    }
    out
}

pub fn fractional_laplacian_in_place(field: &mut SpectralField2D, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    let sym = fractional_symbol(field.grid(), alpha);
    for (c, s) in field.coeffs_mut().iter_mut().zip(sym) {
        *c *= s;
    }
    Ok(())
}

pub fn apply_fractional_laplacian(f: &RealField2D, alpha: f64) -> Result<RealField2D> {
    let mut s = f.to_spectral();
    fractional_laplacian_in_place(&mut s, alpha)?;
    Ok(s.to_real())
}

/// Per-coefficient factors `exp(-kappa t |k|^alpha)`.
pub fn semigroup_factors(grid: &Grid2D, t: f64, kappa: f64, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time t = {t} must be non-negative")));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be non-negative")));
    }
    Ok(fractional_symbol(grid, alpha).into_iter().map(|s| (-kappa * t * s).exp()).collect())
}

pub fn fractional_semigroup(f: &RealField2D, t: f64, kappa: f64, alpha: f64) -> Result<RealField2D> {
    let factors = semigroup_factors(f.grid(), t, kappa, alpha)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut s = f.to_spectral();
    for (c, e) in s.coeffs_mut().iter_mut().zip(factors) {
        *c *= e;
    }
    Ok(s.to_real())
}

/// `d/dx1` in place (Nyquist column zeroed).
pub fn partial1_in_place(field: &mut SpectralField2D) {
    let grid = field.grid().clone();
    let coeffs = field.coeffs_mut();
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            let idx = grid.index(j1, j2);
            coeffs[idx] = if grid.is_nyquist1(j1) {
                Complex64::new(0.0, 0.0)
            } else {
                coeffs[idx] * Complex64::new(0.0, grid.k1()[j1])
            };
        }
    }
}

/// `d/dx2` in place (Nyquist row zeroed).
pub fn partial2_in_place(field: &mut SpectralField2D) {
    let grid = field.grid().clone();
    let coeffs = field.coeffs_mut();
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            let idx = grid.index(j1, j2);
            coeffs[idx] = if grid.is_nyquist2(j2) {
                Complex64::new(0.0, 0.0)
            } else {
                coeffs[idx] * Complex64::new(0.0, grid.k2()[j2])
            };
        }
    }
}

pub fn partial1(f: &RealField2D) -> RealField2D {
    let mut s = f.to_spectral();
    partial1_in_place(&mut s);
    s.to_real()
}

pub fn partial2(f: &RealField2D) -> RealField2D {
    let mut s = f.to_spectral();
    partial2_in_place(&mut s);
    s.to_real()
}

/// Whether coefficient `(j1, j2)` survives the 2/3 rule.
#[inline]
pub fn dealias_keeps(grid: &Grid2D, j1: usize, j2: usize) -> bool {
    3 * grid.m1()[j1].unsigned_abs() as usize <= grid.n1() && 3 * grid.m2()[j2].unsigned_abs() as usize <= grid.n2()
}

pub fn dealias_in_place(field: &mut SpectralField2D) {
    let grid = field.grid().clone();
    let coeffs = field.coeffs_mut();
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            if !dealias_keeps(&grid, j1, j2) {
                coeffs[grid.index(j1, j2)] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Zeroes every coefficient with `|m1| > n1/3` or `|m2| > n2/3`.
pub fn dealias(f: &SpectralField2D) -> SpectralField2D {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

/// Whether `|k|` lies in the sharp dyadic annulus of block `j`.
#[inline]
pub fn in_dyadic_block(kmag: f64, j: i32) -> bool {
    if j < 0 {
        kmag < 1.0
    } else {
        let lo = 2f64.powi(j);
        kmag >= lo && kmag < 2.0 * lo
    }
}

/// Largest block index that can hold a grid mode.
pub fn max_dyadic_index(grid: &Grid2D) -> i32 {
    let kmax = grid
        .k1()
        .iter()
        .fold(0.0_f64, |m, k| m.max(k.abs()))
        .hypot(grid.k2().iter().fold(0.0_f64, |m, k| m.max(k.abs())));
    if kmax < 1.0 {
        -1
    } else {
        kmax.log2().floor() as i32
    }
}

pub fn dyadic_block_spectral(f: &SpectralField2D, j: i32) -> Result<SpectralField2D> {
    if j < -1 {
        return Err(Error::InvalidArgument(format!("dyadic index j = {j} must be >= -1")));
    }
    let grid = f.grid().clone();
    let mut out = f.clone();
    let coeffs = out.coeffs_mut();
    for j2 in 0..grid.n2() {
        for j1 in 0..grid.n1() {
            if !in_dyadic_block(grid.kmag(j1, j2), j) {
                coeffs[grid.index(j1, j2)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(out)
}

/// Sharp-annulus Littlewood-Paley block: keeps `2^j <= |k| < 2^(j+1)`, or
/// `|k| < 1` for `j = -1`.
pub fn dyadic_block(f: &RealField2D, j: i32) -> Result<RealField2D> {
    Ok(dyadic_block_spectral(&f.to_spectral(), j)?.to_real())
}
