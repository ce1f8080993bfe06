//! The dissipation-side term `Psi_alpha`.
//!
//! With `phi(x) = x - omega(x)` (convex), the two integrals become
//!
//! ```text
//! I1 = -(xi/2)^-alpha int_0^1 [phi(xi + xi t) + phi(xi - xi t) - 2 phi(xi)] t^(-1-alpha) dt
//! I2 = -2^alpha int_xi^inf [phi(s + xi) - phi(s - xi) - 2 phi(xi)] s^(-1-alpha) ds
//! ```
//!
//! and `Psi = B (I1 + I2)`. Both integrands are non-negative.

use super::modulus::{Modulus, ModulusKind};
use super::MocConstants;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadResult};

const REL_TOL: f64 = 1e-11;
const MAX_PANELS: usize = 4000;

/// `((1+t)^1.5 + (1-t)^1.5 - 2) / t^2`.
fn power_defect_over_t2(t: f64) -> f64 {
    if t < 0.1 {
        // 2 sum_k C(3/2, 2k) t^(2k-2)
        let mut binom = 1.0;
        let mut sum = 0.0;
        let mut tp = 1.0;
        for k in 0..30 {
            binom *= (1.5 - k as f64) / (k as f64 + 1.0);
            if k % 2 == 1 {
                sum += binom * tp;
                tp *= t * t;
            }
        }
        2.0 * sum
    } else {
        ((1.0 + t).powf(1.5) + (1.0 - t).powf(1.5) - 2.0) / (t * t)
    }
}

/// `[phi(xi(1+t)) + phi(xi(1-t)) - 2 phi(xi)] / t^2`.
fn first_defect(m: &Modulus, xi: f64, t: f64) -> f64 {
    let d = m.delta();
    let a = xi * (1.0 + t);
    let b = xi * (1.0 - t);
    if a <= d {
        return xi.powf(1.5) * power_defect_over_t2(t);
    }
    if b > d {
        if m.kind() != ModulusKind::Moc1 {
            return 0.0;
        }
        if t < 1e-5 {
            return -m.omega_second(xi) * xi * xi;
        }
    }
    -(m.omega_diff(a, xi) + m.omega_diff(b, xi)) / (t * t)
}

/// `phi(s + xi) - phi(s - xi) - 2 phi(xi)` for `s >= xi`.
fn second_defect(m: &Modulus, xi: f64, s: f64) -> f64 {
    let d = m.delta();
    if s + xi <= d {
        let r = xi / s;
        let a = 1.5 * r.ln_1p();
        let b = 1.5 * (-r).ln_1p();
        let diff = s.powf(1.5) * 2.0 * (0.5 * (a + b)).exp() * (0.5 * (a - b)).sinh();
        return diff - 2.0 * xi.powf(1.5);
    }
    2.0 * m.omega(xi) - m.omega_diff(s + xi, s - xi)
}

fn push_break(v: &mut Vec<f64>, x: f64) {
    if x > v[0] && x < *v.last().unwrap() {
        v.push(x);
    }
}

fn sorted_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// `Psi_alpha(xi)` and an error bound. `alpha = 2` gives `2 omega''(xi)`.
pub fn psi_eval(m: &Modulus, xi: f64, alpha: f64, c: &MocConstants) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2]")));
    }
    if !(xi > 0.0) {
        return Err(Error::InvalidArgument(format!("xi = {xi} must be positive")));
    }
    if alpha == 2.0 {
        return Ok((2.0 * m.omega_second(xi), 0.0));
    }
    if m.kind() == ModulusKind::Linear {
        return Ok((0.0, 0.0));
    }
    let d = m.delta();

    // first integral in u = t^(2-alpha), where the integrand is bounded
    let p = 1.0 / (2.0 - alpha);
    let mut ub = vec![0.0, 1.0];
    for tk in [d / xi - 1.0, 1.0 - d / xi] {
        if tk > 0.0 && tk < 1.0 {
            push_break(&mut ub, tk.powf(2.0 - alpha));
        }
    }
    let ub = sorted_breaks(ub);
    let mut j1 = QuadResult::zero();
    for w in ub.windows(2) {
        let r = integrate(|u| p * first_defect(m, xi, u.powf(p)), w[0], w[1], 1e-300, REL_TOL, MAX_PANELS);
        j1 = j1.combine(r);
    }
    let scale1 = (0.5 * xi).powf(-alpha);

    // second integral on [xi, delta + xi], closed-form tail beyond
    let s_end = d + xi;
    let mut sb = vec![xi, s_end];
    if d - xi > xi {
        push_break(&mut sb, d - xi);
        let mut x = xi * 10.0;
        while x < d - xi {
            push_break(&mut sb, x);
            x *= 10.0;
        }
    }
    let sb = sorted_breaks(sb);
    let weight = |s: f64| s.powf(-1.0 - alpha);
    let mut j2 = QuadResult::zero();
    for w in sb.windows(2) {
        let r = integrate(|s| second_defect(m, xi, s) * weight(s), w[0], w[1], 1e-300, REL_TOL, MAX_PANELS);
        j2 = j2.combine(r);
    }
    let mut tail = 2.0 * m.omega(xi) * s_end.powf(-alpha) / alpha;
    let mut tail_err = 0.0;
    if m.kind() == ModulusKind::Moc1 {
        // subtract int F(s) s^(-1-alpha), F = omega(s+xi) - omega(s-xi)
        let h = (1e4 * xi).max(1e4 * d).max(10.0 * s_end);
        let mut fb = vec![s_end];
        let mut x = s_end;
        while x * 10.0 < h {
            x *= 10.0;
            fb.push(x);
        }
        fb.push(h);
        for w in fb.windows(2) {
            let r = integrate(|s| m.omega_diff(s + xi, s - xi) * weight(s), w[0], w[1], 1e-300, REL_TOL, MAX_PANELS);
            tail -= r.value;
            tail_err += r.error;
        }
        // F(s) <= 2 xi gamma / (4 (s - xi)) beyond the cut
        tail_err += m.gamma() * xi / (2.0 * (h - xi)) * h.powf(-alpha) / alpha;
    }
    let two_a = 2f64.powf(alpha);
    let value = -c.b_alpha * (scale1 * j1.value + two_a * (j2.value + tail));
    let err = c.b_alpha * (scale1 * j1.error + two_a * (j2.error + tail_err));
    Ok((value, err))
}

/// Direct quadrature of the defining integrals in `eta`, for cross-checks.
pub fn psi_eval_direct(m: &Modulus, xi: f64, alpha: f64, c: &MocConstants, eta_max: f64) -> f64 {
    let w = |e: f64| e.powf(-1.0 - alpha);
    let d = m.delta();
    let kinks = [0.5 * (d - xi), 0.5 * (xi - d), 0.5 * (d + xi)];
    let pieces = |lo: f64, hi: f64, graded: bool| {
        let mut b = vec![lo, hi];
        for k in kinks {
            if k > lo && k < hi {
                b.push(k);
            }
        }
        if graded {
            let mut x = hi;
            for _ in 0..30 {
                x *= 0.5;
                b.push(x);
            }
        } else {
            let mut x = lo;
            while x * 2.0 < hi {
                x *= 2.0;
                b.push(x);
            }
        }
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        b.dedup();
        b
    };
    let first = |e: f64| {
        if e < 1e-4 * xi {
            // second differences are pure roundoff this close to the diagonal
            4.0 * e * e * m.omega_second(xi) * w(e)
        } else {
            (m.omega(xi + 2.0 * e) + m.omega(xi - 2.0 * e) - 2.0 * m.omega(xi)) * w(e)
        }
    };
    let second = |e: f64| (m.omega(xi + 2.0 * e) - m.omega(2.0 * e - xi) - 2.0 * m.omega(xi)) * w(e);
    let a = integrate_pieces(first, &pieces(0.0, 0.5 * xi, true), 1e-300, 1e-12, 20000);
    let b = integrate_pieces(second, &pieces(0.5 * xi, eta_max, false), 1e-300, 1e-12, 20000);
    c.b_alpha * (a.value + b.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> MocConstants {
        MocConstants { a1: 0.125, a2: 1.0, b_alpha: 1.0 }
    }

    #[test]
    fn alpha_two_is_twice_second_derivative() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        let (v, e) = psi_eval(&m, 0.04, 2.0, &consts()).unwrap();
        assert!((v + 7.5).abs() < 1e-12);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn series_matches_direct() {
        for &t in &[0.02f64, 0.0999, 0.1] {
            let direct = ((1.0 + t).powf(1.5) + (1.0 - t).powf(1.5) - 2.0) / (t * t);
            assert!((power_defect_over_t2(t) - direct).abs() < 1e-11, "{t}");
        }
        assert!((power_defect_over_t2(0.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn negative_for_concave_moduli() {
        let c = consts();
        for m in [Modulus::moc_alpha(0.01).unwrap(), Modulus::moc1(0.01, 0.001).unwrap()] {
            for &alpha in &[0.5, 1.0, 1.5, 1.9] {
                for &xi in &[1e-7, 1e-4, 0.005, 0.01, 0.02, 3.0] {
                    let (v, e) = psi_eval(&m, xi, alpha, &c).unwrap();
                    assert!(v < 0.0 && e < 1e-6 * v.abs(), "{m} alpha={alpha} xi={xi}: {v} +- {e}");
                }
            }
        }
        let (v, _) = psi_eval(&Modulus::linear(), 0.3, 1.5, &c).unwrap();
        assert!(v <= 0.0);
    }

    #[test]
    fn agrees_with_direct_quadrature() {
        let c = consts();
        let m = Modulus::moc_alpha(0.1).unwrap();
        for &alpha in &[0.5, 1.0, 1.5] {
            for &xi in &[0.01, 0.04, 0.08, 0.15] {
                let (v, _) = psi_eval(&m, xi, alpha, &c).unwrap();
                // beyond eta_max the integrand is exactly -2 omega(xi) / eta^(1+alpha)
                let eta_max = 10.0;
                let mut direct = psi_eval_direct(&m, xi, alpha, &c, eta_max);
                direct -= c.b_alpha * 2.0 * m.omega(xi) * eta_max.powf(-alpha) / alpha;
                assert!((v - direct).abs() < 1e-7 * v.abs(), "alpha={alpha} xi={xi}: {v} vs {direct}");
            }
        }
    }
}
