use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Two-dimensional discrete Fourier transform on a row-major `n1 x n2` buffer.
///
/// Element `(j1, j2)` lives at `j2 * n1 + j1`, so a "row" is a line of fixed
/// `x2`. The forward transform is unnormalized with kernel `exp(-i k.x)`;
/// `inverse` must include the `1/(n1 n2)` factor so that the pair is an
/// exact round trip.
pub trait TransformProvider: Send + Sync {
    fn forward(&self, data: &mut [Complex64]);
    fn inverse(&self, data: &mut [Complex64]);
    fn name(&self) -> &'static str;
}

/// FFT-backed provider built on `rustfft` plans. Plans are immutable and
/// scratch space is allocated per call, so one instance can be shared.
pub struct RustFftProvider {
    n1: usize,
    n2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

impl RustFftProvider {
    pub fn new(n1: usize, n2: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n1,
            n2,
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv2: planner.plan_fft_inverse(n2),
        }
    }

    fn run(&self, data: &mut [Complex64], along1: &Arc<dyn Fft<f64>>, along2: &Arc<dyn Fft<f64>>) {
        let (n1, n2) = (self.n1, self.n2);
        assert_eq!(data.len(), n1 * n2, "transform buffer has wrong length");
        let scratch_len = along1.get_inplace_scratch_len().max(along2.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        // rows are contiguous: one batched call transforms all of them
        along1.process_with_scratch(data, &mut scratch);

        let mut transposed = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for j2 in 0..n2 {
            for j1 in 0..n1 {
                transposed[j1 * n2 + j2] = data[j2 * n1 + j1];
            }
        }
        along2.process_with_scratch(&mut transposed, &mut scratch);
        for j1 in 0..n1 {
            for j2 in 0..n2 {
                data[j2 * n1 + j1] = transposed[j1 * n2 + j2];
            }
        }
    }
}

impl TransformProvider for RustFftProvider {
    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd1, &self.fwd2);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv1, &self.inv2);
        let scale = 1.0 / (self.n1 * self.n2) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn name(&self) -> &'static str {
        "rustfft"
    }
}

/// Direct `O(N^2)` evaluation of the DFT sums. Only meant for tiny grids where
/// it serves as a reference for the FFT path.
pub struct DirectDftProvider {
    n1: usize,
    n2: usize,
}

impl DirectDftProvider {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    fn run(&self, data: &mut [Complex64], sign: f64) {
        let (n1, n2) = (self.n1, self.n2);
        let input = data.to_vec();
        for m2 in 0..n2 {
            for m1 in 0..n1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j2 in 0..n2 {
                    for j1 in 0..n1 {
                        let phase = sign * 2.0 * PI * ((m1 * j1) as f64 / n1 as f64 + (m2 * j2) as f64 / n2 as f64);
                        acc += input[j2 * n1 + j1] * Complex64::from_polar(1.0, phase);
                    }
                }
                data[m2 * n1 + m1] = acc;
            }
        }
    }
}

impl TransformProvider for DirectDftProvider {
    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, -1.0);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, 1.0);
        let scale = 1.0 / (self.n1 * self.n2) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn name(&self) -> &'static str {
        "direct-dft"
    }
}

struct GridInner {
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    m1: Vec<i64>,
    m2: Vec<i64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    provider: Arc<dyn TransformProvider>,
}

/// Periodic rectangular grid `[0, L1) x [0, L2)` with signed wavenumber tables.
///
/// Cloning is cheap; clones share the tables and the transform provider.
#[derive(Clone)]
pub struct Grid2D {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n1", &self.inner.n1)
            .field("n2", &self.inner.n2)
            .field("l1", &self.inner.l1)
            .field("l2", &self.inner.l2)
            .field("provider", &self.inner.provider.name())
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n1 == other.inner.n1
                && self.inner.n2 == other.inner.n2
                && self.inner.l1 == other.inner.l1
                && self.inner.l2 == other.inner.l2)
    }
}

fn signed_indices(n: usize) -> Vec<i64> {
    let n = n as i64;
    (0..n).map(|j| if j < n / 2 { j } else { j - n }).collect()
}

impl Grid2D {
    /// Builds a grid with the FFT provider.
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        Self::validate(n1, n2, l1, l2)?;
        Ok(Self::build(n1, n2, l1, l2, Arc::new(RustFftProvider::new(n1, n2))))
    }

    /// Builds a grid around a caller-supplied transform provider.
    pub fn with_provider(n1: usize, n2: usize, l1: f64, l2: f64, provider: Arc<dyn TransformProvider>) -> Result<Self> {
        Self::validate(n1, n2, l1, l2)?;
        Ok(Self::build(n1, n2, l1, l2, provider))
    }

    /// Square grid `n x n` on a box of side `length`.
    pub fn square(n: usize, length: f64) -> Result<Self> {
        Self::new(n, n, length, length)
    }

    fn validate(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<()> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even and >= 8")));
            }
        }
        for (name, l) in [("L1", l1), ("L2", l2)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(())
    }

    fn build(n1: usize, n2: usize, l1: f64, l2: f64, provider: Arc<dyn TransformProvider>) -> Self {
        let m1 = signed_indices(n1);
        let m2 = signed_indices(n2);
        let k1 = m1.iter().map(|&m| 2.0 * PI * m as f64 / l1).collect();
        let k2 = m2.iter().map(|&m| 2.0 * PI * m as f64 / l2).collect();
        Self { inner: Arc::new(GridInner { n1, n2, l1, l2, m1, m2, k1, k2, provider }) }
    }

    pub fn n1(&self) -> usize {
        self.inner.n1
    }
    pub fn n2(&self) -> usize {
        self.inner.n2
    }
    pub fn len(&self) -> usize {
        self.inner.n1 * self.inner.n2
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn l1(&self) -> f64 {
        self.inner.l1
    }
    pub fn l2(&self) -> f64 {
        self.inner.l2
    }
    pub fn dx1(&self) -> f64 {
        self.inner.l1 / self.inner.n1 as f64
    }
    pub fn dx2(&self) -> f64 {
        self.inner.l2 / self.inner.n2 as f64
    }
    /// Area of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }
    pub fn area(&self) -> f64 {
        self.inner.l1 * self.inner.l2
    }

    /// Angular wavenumbers along `x1`, signed FFT ordering.
    pub fn k1(&self) -> &[f64] {
        &self.inner.k1
    }
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }
    /// Signed integer mode indices along `x1`.
    pub fn m1(&self) -> &[i64] {
        &self.inner.m1
    }
    pub fn m2(&self) -> &[i64] {
        &self.inner.m2
    }

    #[inline]
    pub fn index(&self, j1: usize, j2: usize) -> usize {
        j2 * self.inner.n1 + j1
    }

    /// Physical coordinates of sample `(j1, j2)`.
    #[inline]
    pub fn coords(&self, j1: usize, j2: usize) -> (f64, f64) {
        (j1 as f64 * self.dx1(), j2 as f64 * self.dx2())
    }

    #[inline]
    pub fn is_nyquist1(&self, j1: usize) -> bool {
        j1 == self.inner.n1 / 2
    }
    #[inline]
    pub fn is_nyquist2(&self, j2: usize) -> bool {
        j2 == self.inner.n2 / 2
    }

    /// `|k|` at spectral index `(j1, j2)`.
    #[inline]
    pub fn kmag(&self, j1: usize, j2: usize) -> f64 {
        self.inner.k1[j1].hypot(self.inner.k2[j2])
    }

    pub fn provider(&self) -> &dyn TransformProvider {
        self.inner.provider.as_ref()
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.inner.provider.forward(data);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.inner.provider.inverse(data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_for_2pi_box() {
        let g = Grid2D::new(8, 8, 2.0 * PI, 2.0 * PI).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.k1().iter().zip(expected) {
            assert!((k - e).abs() < 1e-15);
        }
        assert_eq!(g.k1()[0], 0.0);
    }

    #[test]
    fn wavenumbers_for_4pi_box() {
        let g = Grid2D::new(8, 8, 4.0 * PI, 4.0 * PI).unwrap();
        let expected = [0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5];
        for (k, e) in g.k1().iter().zip(expected) {
            assert!((k - e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid2D::new(7, 8, 2.0 * PI, 2.0 * PI).is_err());
        assert!(Grid2D::new(6, 8, 1.0, 1.0).is_err());
        assert!(Grid2D::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid2D::new(8, 8, 1.0, -2.0).is_err());
    }

    #[test]
    fn tables_antisymmetric_except_nyquist() {
        let g = Grid2D::new(16, 10, 3.0, 5.0).unwrap();
        let n = g.n1();
        for j in 1..n {
            if j == n / 2 {
                continue;
            }
            assert_eq!(g.k1()[j], -g.k1()[n - j]);
        }
    }

    #[test]
    fn fft_matches_direct_dft() {
        let fast = RustFftProvider::new(8, 10);
        let slow = DirectDftProvider::new(8, 10);
        let data: Vec<Complex64> =
            (0..80).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
        let mut a = data.clone();
        let mut b = data.clone();
        fast.forward(&mut a);
        slow.forward(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-11);
        }
        fast.inverse(&mut a);
        for (x, y) in a.iter().zip(&data) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
