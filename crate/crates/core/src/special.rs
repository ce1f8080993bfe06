//! Special functions, thin wrappers over `libm`.

/// Euler's Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-11);
    }

    #[test]
    fn j0_known_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        // first zero of J0
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-15);
    }
}
