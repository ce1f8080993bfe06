use rustfft::num_complex::Complex64;

use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Physical-space samples of one scalar field, row-major (`x1` fastest).
#[derive(Clone, Debug)]
pub struct RealField2D {
    grid: Grid2D,
    values: Vec<f64>,
}

/// Fourier coefficients in the grid's signed index layout.
#[derive(Clone, Debug)]
pub struct SpectralField2D {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl RealField2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid2D, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    /// Samples `f(x1, x2)` at the grid nodes.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j2 in 0..grid.n2() {
            for j1 in 0..grid.n1() {
                let (x1, x2) = grid.coords(j1, j2);
                values.push(f(x1, x2));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {bad} is not finite")));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub(crate) fn from_values_unchecked(grid: &Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, j1: usize, j2: usize) -> f64 {
        self.values[self.grid.index(j1, j2)]
    }

    /// Samples of the line `x2 = j2 * dx2`.
    pub fn row(&self, j2: usize) -> &[f64] {
        let n1 = self.grid.n1();
        &self.values[j2 * n1..(j2 + 1) * n1]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_spectral(&self) -> SpectralField2D {
        let mut coeffs: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut coeffs);
        SpectralField2D { grid: self.grid.clone(), coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `(sum |f|^p dA)^(1/p)`; `p = inf` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let da = self.grid.cell_area();
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * da).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let da = self.grid.cell_area();
        (self.values.iter().map(|v| v * v).sum::<f64>() * da).sqrt()
    }

    /// Integral over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub(crate) fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Maximum absolute pointwise difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl SpectralField2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: &Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("expected {} coefficients, got {}", grid.len(), coeffs.len())));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Inverse transform, discarding the imaginary residue.
    pub fn to_real(&self) -> RealField2D {
        self.to_real_with_residue().0
    }

    /// Inverse transform returning the field together with the largest
    /// imaginary part seen in physical space.
    pub fn to_real_with_residue(&self) -> (RealField2D, f64) {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        let residue = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
        let values = buf.into_iter().map(|c| c.re).collect();
        (RealField2D::from_values_unchecked(&self.grid, values), residue)
    }

    /// Largest violation of `c(-k) = conj(c(k))`, relative to the largest
    /// coefficient magnitude. Nyquist lines pair with themselves.
    pub fn hermitian_defect(&self) -> f64 {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for j2 in 0..n2 {
            for j1 in 0..n1 {
                let a = self.coeffs[self.grid.index(j1, j2)];
                let b = self.coeffs[self.grid.index((n1 - j1) % n1, (n2 - j2) % n2)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / scale
    }

    /// `L^2` norm of the physical field, evaluated from coefficients.
    pub fn l2_norm(&self) -> f64 {
        let n = self.grid.len() as f64;
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell_area() / n).sqrt()
    }
}
