//! The velocity-side modulus `Omega(xi) = A1 omega(xi)
//! + A2 (int_0^xi omega/eta + xi int_xi^inf omega/eta^2)`.

use super::modulus::{Modulus, ModulusKind};
use super::MocConstants;
use crate::quadrature::{integrate, integrate_pieces};

const REL_TOL: f64 = 1e-13;

/// Truncation point of the slowly converging MOC1 tail.
fn tail_cut(m: &Modulus, xi: f64) -> f64 {
    (1e4 * xi).max(1e4 * m.delta())
}

/// `int_0^xi omega(eta) / eta d eta` in closed form.
fn head_integral(m: &Modulus, xi: f64) -> f64 {
    if m.kind() == ModulusKind::Linear {
        return xi;
    }
    let d = m.delta();
    if xi <= d {
        return xi - 2.0 / 3.0 * xi.powf(1.5);
    }
    let base = d - 2.0 / 3.0 * d.powf(1.5);
    let wd = m.omega(d);
    let l = (xi / d).ln();
    match m.kind() {
        ModulusKind::Moc1 => base + wd * l + m.gamma() * ((4.0 + l) * (l / 4.0).ln_1p() - l),
        _ => base + wd * l,
    }
}

/// `int_a^inf omega / eta^2` for `a >= delta`, with an error bound.
fn tail_beyond_delta(m: &Modulus, a: f64, h: f64) -> (f64, f64) {
    match m.kind() {
        ModulusKind::Moc1 => {
            // eta = a e^s
            let len = (h / a).ln();
            let r = integrate(|s| m.omega(a * s.exp()) * (-s).exp() / a, 0.0, len, 1e-300, REL_TOL, 2000);
            (r.value, r.error + (m.omega(h) + m.gamma()) / h)
        }
        ModulusKind::Linear => (f64::INFINITY, 0.0),
        _ => (m.omega(m.delta()) / a, 0.0),
    }
}

/// `Omega(xi)` from closed-form antiderivatives; returns `(value, error_bound)`.
pub fn omega_eval(m: &Modulus, xi: f64, c: &MocConstants) -> (f64, f64) {
    if m.kind() == ModulusKind::Linear {
        return (f64::INFINITY, 0.0);
    }
    let d = m.delta();
    let h = tail_cut(m, xi);
    let i1 = head_integral(m, xi);
    let (i2, e2) = if xi <= d {
        let (t, e) = tail_beyond_delta(m, d, h);
        ((d / xi).ln() - 2.0 * (d.sqrt() - xi.sqrt()) + t, e)
    } else {
        tail_beyond_delta(m, xi, h)
    };
    (c.a1 * m.omega(xi) + c.a2 * (i1 + xi * i2), c.a2 * xi * e2)
}

/// Same quantity by plain adaptive quadrature of both integrals.
pub fn omega_eval_quadrature(m: &Modulus, xi: f64, c: &MocConstants) -> (f64, f64) {
    if m.kind() == ModulusKind::Linear {
        return (f64::INFINITY, 0.0);
    }
    let d = m.delta();
    let f1 = |eta: f64| if eta == 0.0 { 1.0 } else { m.omega(eta) / eta };
    let head = integrate_pieces(f1, &[0.0, xi.min(d), xi], 1e-300, 1e-12, 4000);
    let h = tail_cut(m, xi);
    let mut breaks = vec![xi];
    if d > xi {
        breaks.push(d);
    }
    let mut b = *breaks.last().unwrap();
    while b * 10.0 < h {
        b *= 10.0;
        breaks.push(b);
    }
    breaks.push(h);
    let tail = integrate_pieces(|eta| m.omega(eta) / (eta * eta), &breaks, 1e-300, 1e-12, 4000);
    let (rest, rest_err) = match m.kind() {
        ModulusKind::Moc1 => (0.0, (m.omega(h) + m.gamma()) / h),
        _ => (m.omega(d) / h, 0.0),
    };
    let value = c.a1 * m.omega(xi) + c.a2 * (head.value + xi * (tail.value + rest));
    let err = c.a2 * (head.error + xi * (tail.error + rest_err));
    (value, err)
}
