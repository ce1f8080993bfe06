//! Fractional heat kernels and the singular-integral form of `|D|^alpha`.
//!
//! `K_alpha(y)` is the inverse transform of `exp(-|zeta|^alpha)` normalised so
//! that `int K_alpha = 1`. Being radial, it reduces to the Hankel integral
//! `(2 pi)^-1 int_0^inf exp(-rho^alpha) J0(rho r) rho d rho`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate, QuadResult};
use crate::special::{bessel_j0, gamma};

/// `alpha Gamma(1 + alpha/2) / (2 pi^(1+alpha) Gamma(1 - alpha/2))`.
///
/// This is the singular-integral constant for the unit-frequency Fourier
/// convention. With angular wavenumbers the operator uses
/// [`dalpha_constant`] instead.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("c_alpha needs 0 < alpha < 2, got {alpha}")));
    }
    Ok(alpha * gamma(1.0 + alpha / 2.0) / (2.0 * PI.powf(1.0 + alpha) * gamma(1.0 - alpha / 2.0)))
}

/// Constant `C` with `|D|^alpha f = -C p.v. int (f(x+y) - f(x)) / |y|^(2+alpha) dy`
/// when `|D|^alpha` has symbol `|k|^alpha`. Equals `(2 pi)^alpha c_alpha`.
pub fn dalpha_constant(alpha: f64) -> Result<f64> {
    Ok((2.0 * PI).powf(alpha) * c_alpha(alpha)?)
}

/// Kernel samples with per-radius error estimates.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub alpha: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Closed forms for `alpha = 1` (Poisson) and `alpha = 2` (heat).
pub fn kernel_closed_form(alpha: f64, r: f64) -> Option<f64> {
    if alpha == 1.0 {
        Some((1.0 + r * r).powf(-1.5) / (2.0 * PI))
    } else if alpha == 2.0 {
        Some((-r * r / 4.0).exp() / (4.0 * PI))
    } else {
        None
    }
}

/// `K_alpha(kappa t, y) = (kappa t)^(-2/alpha) K_alpha(y / (kappa t)^(1/alpha))`.
pub fn kernel_rescaled(alpha: f64, kappa_t: f64, r: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let s = kappa_t.powf(1.0 / alpha);
    kernel(r / s) / (s * s)
}

const KERNEL_TOL: f64 = 1e-10;

fn hankel_cutoff(alpha: f64) -> f64 {
    // exp(-rho^alpha) rho < 1e-20 beyond this point
    let mut rho: f64 = 10.0;
    for _ in 0..50 {
        rho = (46.0 + rho.ln()).powf(1.0 / alpha);
    }
    rho
}

fn kernel_breaks(alpha: f64, r: f64) -> Vec<f64> {
    let rho_max = hankel_cutoff(alpha);
    let width = if r > 0.0 { (PI / r).min(1.0) } else { 1.0 };
    // geometric grading at the origin, where exp(-rho^alpha) is not smooth
    let mut breaks: Vec<f64> = (0..=40).rev().map(|k| 0.5_f64.powi(k) * width).collect();
    breaks.insert(0, 0.0);
    let mut x = width;
    while x < rho_max {
        x = (x + width).min(rho_max);
        breaks.push(x);
    }
    breaks
}

fn panel_sum(nodes: &[f64], weights: &[f64], breaks: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let c = 0.5 * (w[0] + w[1]);
        let h = 0.5 * (w[1] - w[0]);
        let s: f64 = nodes.iter().zip(weights).map(|(x, wt)| wt * f(c + h * x)).sum();
        total += s * h;
    }
    total
}

/// Samples `K_alpha` at the given radii by composite Gauss-Legendre quadrature
/// of the Hankel integral. The error estimate compares 20- and 30-point rules.
pub fn kernel_k(alpha: f64, radii: &[f64]) -> Result<KernelTable> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("kernel needs 0 < alpha <= 2, got {alpha}")));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("radius {r} must be finite and >= 0")));
    }
    let (x20, w20) = gauss_legendre(20);
    let (x30, w30) = gauss_legendre(30);
    let mut values = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let breaks = kernel_breaks(alpha, r);
        let f = |rho: f64| (-rho.powf(alpha)).exp() * bessel_j0(rho * r) * rho;
        let coarse = panel_sum(&x20, &w20, &breaks, &f) / (2.0 * PI);
        let fine = panel_sum(&x30, &w30, &breaks, &f) / (2.0 * PI);
        let err = (fine - coarse).abs();
        if err > KERNEL_TOL.max(1e-8 * fine.abs()) {
            return Err(Error::Quadrature { estimate: err, tolerance: KERNEL_TOL });
        }
        values.push(fine);
        errors.push(err);
    }
    Ok(KernelTable { alpha, radii: radii.to_vec(), values, errors })
}

/// A twice-differentiable test function on the plane.
pub trait SmoothFunction2D: Sync {
    fn value(&self, x: [f64; 2]) -> f64;
    fn gradient(&self, x: [f64; 2]) -> [f64; 2];
    fn sup_norm(&self) -> f64;

    /// `(f_inf, eps)` such that `|f(x + y) - f_inf| <= eps` whenever
    /// `|y| >= radius`. The default uses only the sup norm.
    fn far_field(&self, _x: [f64; 2], _radius: f64) -> (f64, f64) {
        (0.0, self.sup_norm())
    }
}

/// Isotropic Gaussian `amplitude * exp(-|x - center|^2 / width^2)`.
#[derive(Clone, Copy, Debug)]
pub struct Gaussian2D {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

impl SmoothFunction2D for Gaussian2D {
    fn value(&self, x: [f64; 2]) -> f64 {
        let d1 = x[0] - self.center[0];
        let d2 = x[1] - self.center[1];
        self.amplitude * (-(d1 * d1 + d2 * d2) / (self.width * self.width)).exp()
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let v = self.value(x);
        let s = -2.0 / (self.width * self.width);
        [s * (x[0] - self.center[0]) * v, s * (x[1] - self.center[1]) * v]
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
    fn far_field(&self, x: [f64; 2], radius: f64) -> (f64, f64) {
        let d = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt();
        let gap = (radius - d).max(0.0);
        (0.0, self.amplitude.abs() * (-(gap * gap) / (self.width * self.width)).exp())
    }
}

/// Constant function, mostly for tests.
#[derive(Clone, Copy, Debug)]
pub struct Constant2D(pub f64);

impl SmoothFunction2D for Constant2D {
    fn value(&self, _x: [f64; 2]) -> f64 {
        self.0
    }
    fn gradient(&self, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs()
    }
    fn far_field(&self, _x: [f64; 2], _radius: f64) -> (f64, f64) {
        (self.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DalphaOptions {
    /// Absolute tolerance on the returned value.
    pub tol: f64,
    /// Truncation radius of the outer integral.
    pub r_out: f64,
}

impl Default for DalphaOptions {
    fn default() -> Self {
        Self { tol: 1e-8, r_out: 50.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DalphaResult {
    pub value: f64,
    /// Quadrature error plus the analytic truncation bound.
    pub error: f64,
    pub tail_bound: f64,
}

/// Trapezoid rule on the circle of radius `rho`, doubled until it settles.
fn circle_integral(g: &impl Fn(f64, f64) -> f64, rho: f64, tol: f64) -> (f64, f64) {
    let eval = |n: usize| -> f64 {
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let (s, c) = (i as f64 * h).sin_cos();
                g(rho * c, rho * s)
            })
            .sum::<f64>()
            * h
    };
    let mut n = 32;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        let diff = (cur - prev).abs();
        if diff <= tol || n >= 1 << 14 {
            return (cur, diff);
        }
        prev = cur;
    }
}

/// `|D|^alpha f(x)` from the singular-integral representation with split
/// radius `r`. Polar coordinates: trapezoid in angle, adaptive Kronrod in
/// radius. The `-f(x)` part of the outer integral is summed in closed form;
/// the remaining tail beyond `opts.r_out` is bounded via
/// [`SmoothFunction2D::far_field`].
pub fn dalpha_integral(
    f: &impl SmoothFunction2D,
    x: [f64; 2],
    alpha: f64,
    r: f64,
    opts: DalphaOptions,
) -> Result<DalphaResult> {
    let constant = dalpha_constant(alpha)?;
    if !(r > 0.0 && r < opts.r_out) {
        return Err(Error::InvalidArgument(format!("split radius {r} must lie in (0, {})", opts.r_out)));
    }
    let fx = f.value(x);
    let gx = f.gradient(x);
    let tol = opts.tol / constant;
    let ang_tol = 1e-13 * f.sup_norm().max(1e-300);

    // inner ball. Below rho_t the circle average is a rho^2 + b rho^4 + ...
    // and direct evaluation is dominated by cancellation, so that core is
    // summed in closed form with a, b fitted at rho_t and 2 rho_t.
    let inner_g = |y1: f64, y2: f64| f.value([x[0] + y1, x[1] + y2]) - fx - y1 * gx[0] - y2 * gx[1];
    let rho_t = 1e-3 * r;
    let (a1, _) = circle_integral(&inner_g, rho_t, ang_tol);
    let (a2, _) = circle_integral(&inner_g, 2.0 * rho_t, ang_tol);
    let b_coef = (a2 - 4.0 * a1) / (12.0 * rho_t.powi(4));
    let a_coef = (a1 - b_coef * rho_t.powi(4)) / (rho_t * rho_t);
    let b_term = b_coef * rho_t.powf(4.0 - alpha) / (4.0 - alpha);
    let core = a_coef * rho_t.powf(2.0 - alpha) / (2.0 - alpha) + b_term;
    // rho = r u^m keeps the integrand bounded as rho -> 0
    let m = if alpha > 1.0 { 1.0 / (2.0 - alpha) } else { 1.0 };
    let u_t = (rho_t / r).powf(1.0 / m);
    let mut inner = integrate(
        |u| {
            let rho = r * u.powf(m);
            let drho = r * m * u.powf(m - 1.0);
            let (a, _) = circle_integral(&inner_g, rho, ang_tol);
            a * rho.powf(-1.0 - alpha) * drho
        },
        u_t,
        1.0,
        0.5 * tol,
        1e-12,
        4000,
    );
    inner.value += core;
    // the next term is smaller than b_term by about (rho_t / r)^2
    inner.error += b_term.abs() * (rho_t / r).powi(2) + 1e-15 * core.abs();

    let outer_g = |y1: f64, y2: f64| f.value([x[0] + y1, x[1] + y2]);
    let mut breaks = vec![r];
    let mut b = r;
    while b * 2.0 < opts.r_out {
        b *= 2.0;
        breaks.push(b);
    }
    breaks.push(opts.r_out);
    let mut outer = QuadResult::zero();
    for w in breaks.windows(2) {
        let piece = integrate(
            |rho| circle_integral(&outer_g, rho, ang_tol).0 * rho.powf(-1.0 - alpha),
            w[0],
            w[1],
            0.5 * tol / breaks.len() as f64,
            1e-12,
            4000,
        );
        outer = outer.combine(piece);
    }
    let (f_inf, eps) = f.far_field(x, opts.r_out);
    let r_out_pow = opts.r_out.powf(-alpha);
    // -f(x) over |y| > r, plus the far-field constant over |y| > r_out
    let closed = -2.0 * PI * fx * r.powf(-alpha) / alpha + 2.0 * PI * f_inf * r_out_pow / alpha;
    let tail_bound = constant * 2.0 * PI * eps * r_out_pow / alpha;

    let total = inner.value + outer.value + closed;
    let quad_err = constant * (inner.error + outer.error);
    let error = quad_err + tail_bound;
    if !(inner.converged && outer.converged) || error > opts.tol {
        return Err(Error::Quadrature { estimate: error, tolerance: opts.tol });
    }
    Ok(DalphaResult { value: -constant * total, error, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_alpha_at_one() {
        let c = c_alpha(1.0).unwrap();
        assert!((c - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        assert!((c - 0.025_330_3).abs() < 1e-7);
    }

    #[test]
    fn c_alpha_half_matches_libm_gamma() {
        let expected = 0.5 * libm::tgamma(1.25) / (2.0 * PI.powf(1.5) * libm::tgamma(0.75));
        assert!((c_alpha(0.5).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn c_alpha_rejects_two() {
        assert!(c_alpha(2.0).is_err());
        assert!(c_alpha(0.0).is_err());
    }

    #[test]
    fn c_alpha_vanishes_towards_two() {
        let mut prev = c_alpha(1.9).unwrap();
        let mut a = 1.9;
        while a < 1.999 {
            a += 0.001;
            let c = c_alpha(a).unwrap();
            assert!(c < prev && c > 0.0);
            prev = c;
        }
    }

    #[test]
    fn dalpha_constant_standard_form() {
        for &a in &[0.3, 1.0, 1.5, 1.9] {
            let std = a * 2f64.powf(a - 1.0) * gamma(1.0 + a / 2.0) / (PI * gamma(1.0 - a / 2.0));
            assert!((dalpha_constant(a).unwrap() - std).abs() < 1e-13 * std);
        }
    }

    #[test]
    fn kernel_closed_forms() {
        let radii = [0.0, 0.5, 1.0, 2.0, 5.0];
        for alpha in [1.0, 2.0] {
            let t = kernel_k(alpha, &radii).unwrap();
            for (r, v) in radii.iter().zip(&t.values) {
                let exact = kernel_closed_form(alpha, *r).unwrap();
                assert!((v - exact).abs() < 1e-10, "alpha {alpha}, r {r}: {v} vs {exact}");
            }
        }
        assert!((kernel_closed_form(2.0, 0.0).unwrap() - 0.079_577_5).abs() < 1e-7);
        assert!((kernel_closed_form(1.0, 0.0).unwrap() - 0.159_154_9).abs() < 1e-7);
    }

    #[test]
    fn kernel_three_halves_monotone() {
        let t = kernel_k(1.5, &[0.0, 1.0, 2.0]).unwrap();
        assert!(t.values[0] > t.values[1] && t.values[1] > t.values[2] && t.values[2] > 0.0);
    }

    #[test]
    fn rescaling_matches_heat_kernel() {
        let t = 0.7;
        let k = kernel_rescaled(2.0, t, 1.3, |r| kernel_closed_form(2.0, r).unwrap());
        let exact = (-1.3f64 * 1.3 / (4.0 * t)).exp() / (4.0 * PI * t);
        assert!((k - exact).abs() < 1e-15);
    }

    #[test]
    fn dalpha_of_constant_vanishes() {
        let r = dalpha_integral(&Constant2D(3.0), [0.2, -0.1], 1.0, 1.0, DalphaOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn dalpha_of_gaussian_at_origin() {
        // (2 pi)^-2 int |k| pi exp(-|k|^2/4) dk = sqrt(pi)
        let g = Gaussian2D { amplitude: 1.0, center: [0.0, 0.0], width: 1.0 };
        let r = dalpha_integral(&g, [0.0, 0.0], 1.0, 1.0, DalphaOptions::default()).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-7, "{r:?}");
    }
}
