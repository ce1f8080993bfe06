//! The explicit moduli of continuity and their rescalings.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulusKind {
    /// `xi - xi^1.5` up to `delta`, then `omega' = gamma / (xi (4 + log(xi/delta)))`.
    Moc1,
    /// `xi - xi^1.5` up to `delta`, constant beyond.
    MocAlpha,
    /// Same shape as `MocAlpha`, used for the two-exponent system.
    MocApp,
    /// `omega(xi) = xi`; concave but not one of the explicit moduli.
    Linear,
}

impl ModulusKind {
    pub fn name(self) -> &'static str {
        match self {
            ModulusKind::Moc1 => "MOC1",
            ModulusKind::MocAlpha => "MOCAlpha",
            ModulusKind::MocApp => "MOCApp",
            ModulusKind::Linear => "Linear",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulus {
    kind: ModulusKind,
    delta: f64,
    gamma: f64,
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModulusKind::Moc1 => write!(f, "MOC1(delta={}, gamma={})", self.delta, self.gamma),
            ModulusKind::Linear => write!(f, "Linear"),
            k => write!(f, "{}(delta={})", k.name(), self.delta),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    // omega' = 1 - 1.5 sqrt(xi) must stay positive on [0, delta]
    if !(delta > 0.0 && delta < 4.0 / 9.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 4/9)")));
    }
    Ok(())
}

impl Modulus {
    pub fn moc1(delta: f64, gamma: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(gamma > 0.0 && gamma <= delta) {
            return Err(Error::InvalidArgument(format!("gamma = {gamma} must lie in (0, delta]")));
        }
        if 1.0 - 1.5 * delta.sqrt() < gamma / (4.0 * delta) {
            return Err(Error::InvalidArgument(format!("MOC1(delta={delta}, gamma={gamma}) is not concave at delta")));
        }
        Ok(Self { kind: ModulusKind::Moc1, delta, gamma })
    }

    pub fn moc_alpha(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { kind: ModulusKind::MocAlpha, delta, gamma: 0.0 })
    }

    pub fn moc_app(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { kind: ModulusKind::MocApp, delta, gamma: 0.0 })
    }

    pub fn linear() -> Self {
        Self { kind: ModulusKind::Linear, delta: f64::INFINITY, gamma: 0.0 }
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, ModulusKind::MocAlpha | ModulusKind::MocApp)
    }

    /// `sup omega` (infinite for the unbounded kinds).
    pub fn sup(&self) -> f64 {
        if self.is_bounded() {
            self.omega_delta()
        } else {
            f64::INFINITY
        }
    }

    fn omega_delta(&self) -> f64 {
        self.delta - self.delta.powf(1.5)
    }

    pub fn omega(&self, xi: f64) -> f64 {
        if self.kind == ModulusKind::Linear {
            return xi;
        }
        if xi <= self.delta {
            xi - xi.powf(1.5)
        } else if self.kind == ModulusKind::Moc1 {
            self.omega_delta() + self.gamma * ((xi / self.delta).ln() / 4.0).ln_1p()
        } else {
            self.omega_delta()
        }
    }

    /// Left derivative at the kink, derivative elsewhere.
    pub fn omega_prime(&self, xi: f64) -> f64 {
        if self.kind == ModulusKind::Linear {
            return 1.0;
        }
        if xi <= self.delta {
            1.0 - 1.5 * xi.sqrt()
        } else if self.kind == ModulusKind::Moc1 {
            self.gamma / (xi * (4.0 + (xi / self.delta).ln()))
        } else {
            0.0
        }
    }

    /// Second derivative; at `delta` the left limit is returned with `true`.
    pub fn omega_second_flagged(&self, xi: f64) -> (f64, bool) {
        if self.kind == ModulusKind::Linear {
            return (0.0, false);
        }
        if xi <= self.delta {
            (-0.75 / xi.sqrt(), xi == self.delta)
        } else if self.kind == ModulusKind::Moc1 {
            let l = (xi / self.delta).ln();
            (-self.gamma * (5.0 + l) / (xi * xi * (4.0 + l) * (4.0 + l)), false)
        } else {
            (0.0, false)
        }
    }

    pub fn omega_second(&self, xi: f64) -> f64 {
        self.omega_second_flagged(xi).0
    }

    /// `omega(x) - omega(y)` without cancellation in the log zone.
    pub(crate) fn omega_diff(&self, x: f64, y: f64) -> f64 {
        if self.kind == ModulusKind::Moc1 && x > self.delta && y > self.delta {
            // ln(4 + ln(x/d)) - ln(4 + ln(y/d)) = ln_1p(ln(x/y) / (4 + ln(y/d)))
            let r = ((x - y) / y).ln_1p();
            return self.gamma * (r / (4.0 + (y / self.delta).ln())).ln_1p();
        }
        self.omega(x) - self.omega(y)
    }

    /// Smallest `xi` with `omega(xi) = z`. Unbounded kinds may return infinity
    /// when the answer overflows.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::InvalidArgument(format!("omega inverse of {z}")));
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        if self.kind == ModulusKind::Linear {
            return Ok(z);
        }
        let wd = self.omega_delta();
        if z > wd {
            return match self.kind {
                ModulusKind::Moc1 => {
                    let e = ((z - wd) / self.gamma).exp_m1();
                    Ok(self.delta * (4.0 * e).exp())
                }
                _ => Err(Error::ModulusBounded(format!("{z} exceeds sup omega = {wd} of {self}"))),
            };
        }
        // omega is increasing and concave on [0, delta]: safeguarded Newton
        let (mut lo, mut hi) = (0.0, self.delta);
        let mut x = z.min(hi);
        for _ in 0..200 {
            let f = x - x.powf(1.5) - z;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = 1.0 - 1.5 * x.sqrt();
            let mut next = x - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}

/// `omega_lambda(xi) = lambda^(alpha-1) omega(lambda xi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledModulus {
    pub base: Modulus,
    pub lambda: f64,
    pub alpha: f64,
}

impl ScaledModulus {
    pub fn new(base: Modulus, lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self { base, lambda, alpha })
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.lambda.powf(self.alpha - 1.0) * self.base.omega(self.lambda * xi)
    }

    pub fn prime(&self, xi: f64) -> f64 {
        self.lambda.powf(self.alpha) * self.base.omega_prime(self.lambda * xi)
    }

    pub fn inverse(&self, z: f64) -> Result<f64> {
        Ok(self.base.inverse(z / self.lambda.powf(self.alpha - 1.0))? / self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moc_alpha_values() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        assert!((m.omega(0.04) - 0.032).abs() < 1e-15);
        assert!((m.omega(0.5) - 0.068_377_223_398_316_2).abs() < 1e-12);
        assert_eq!(m.omega(0.0), 0.0);
        assert_eq!(m.omega_prime(0.0), 1.0);
    }

    #[test]
    fn moc1_log_growth() {
        let m = Modulus::moc1(0.1, 0.05).unwrap();
        let xi = 0.1 * std::f64::consts::E;
        assert!((m.omega(xi) - m.omega(0.1) - 0.05 * 1.25f64.ln()).abs() < 1e-15);
        assert!((0.05 * 1.25f64.ln() - 0.011_157_2).abs() < 1e-7);
        assert!((m.omega_prime(0.1 + 1e-12) - 0.05 / (0.1 * 4.0)).abs() < 1e-9);
    }

    #[test]
    fn second_derivative_at_kink() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        let (v, flag) = m.omega_second_flagged(0.1);
        assert!(flag);
        assert!((v + 0.75 / 0.1f64.sqrt()).abs() < 1e-14);
        assert!((m.omega_second(0.04) + 3.75).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        assert_eq!(m.inverse(0.0).unwrap(), 0.0);
        assert!((m.inverse(0.032).unwrap() - 0.04).abs() < 1e-12);
        assert!(matches!(m.inverse(0.07), Err(Error::ModulusBounded(_))));
        let m1 = Modulus::moc1(0.1, 0.05).unwrap();
        let x = m1.inverse(0.2).unwrap();
        assert!((m1.omega(x) - 0.2).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Modulus::moc1(0.1, 0.2).is_err());
        assert!(Modulus::moc_alpha(0.5).is_err());
        assert!(Modulus::moc_alpha(0.0).is_err());
    }

    #[test]
    fn concave_by_second_differences() {
        for m in [Modulus::moc1(0.01, 0.001).unwrap(), Modulus::moc_alpha(0.1).unwrap()] {
            let h = 1e-4;
            let mut x = h;
            while x < 1.0 {
                let d2 = m.omega(x + h) + m.omega(x - h) - 2.0 * m.omega(x);
                assert!(d2 <= 1e-15, "{m} at {x}: {d2}");
                x += 0.37e-2;
            }
        }
    }

    #[test]
    fn continuous_at_delta() {
        let m = Modulus::moc1(0.05, 0.01).unwrap();
        let d = 0.05;
        assert!((m.omega(d * (1.0 + 1e-12)) - m.omega(d)).abs() < 1e-12);
    }

    #[test]
    fn scaled_identity() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        let s = ScaledModulus::new(m, 7.5, 1.5).unwrap();
        let xi = 0.003;
        assert!((s.eval(xi) - 7.5f64.powf(0.5) * m.omega(7.5 * xi)).abs() < 1e-16);
        let z = s.eval(xi);
        assert!((s.inverse(z).unwrap() - xi).abs() < 1e-14);
    }
}
