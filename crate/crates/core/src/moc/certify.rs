//! Sampled certification of `Omega(xi) omega'(xi) + Psi_alpha(xi) < 0`.
//!
//! Margins are reported in the unscaled variable: with
//! `omega_lambda(xi) = lambda^(alpha-1) omega(lambda xi)` every term of the
//! inequality picks up the same positive factor `lambda^(2 alpha - 1)`, so
//! the sign at `xi` equals the sign of the unscaled margin at `lambda xi`.

use rayon::prelude::*;

use super::modulus::{Modulus, ModulusKind};
use super::omega::omega_eval;
use super::psi::psi_eval;
use super::MocConstants;
use crate::error::{Error, Result};
use crate::kernels::c_alpha;

impl MocConstants {
    /// `A1 = 1/8`, `A2 = 1`, `B = c_alpha`. At `alpha = 2` the constant is
    /// unused and set to 1.
    pub fn defaults(alpha: f64) -> Result<Self> {
        let b_alpha = if alpha == 2.0 { 1.0 } else { c_alpha(alpha)? };
        Ok(Self { a1: 0.125, a2: 1.0, b_alpha })
    }

    pub fn validate(&self) -> Result<()> {
        if [self.a1, self.a2, self.b_alpha].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("constants must be positive: {self:?}")))
        }
    }
}

/// Output of [`lambda_select`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub delta0: f64,
    pub c0: f64,
    pub xi0: f64,
}

/// Chooses the rescaling `lambda` and the initial modulus scale `delta0`
/// from `N = ||theta0||_{L^inf L^1}` and `G = ||grad rho0||_inf`.
pub fn lambda_select(theta_norm: f64, grad_norm: f64, alpha: f64, m: &Modulus) -> Result<LambdaChoice> {
    if !(1.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in [1, 2]")));
    }
    if !(theta_norm > 0.0 && grad_norm > 0.0) {
        return Err(Error::InvalidArgument("both norms must be positive".into()));
    }
    let d = m.delta();
    let c0 = d - d.powf(1.5);
    let xi0 = d;
    let lambda = if alpha == 1.0 {
        if m.is_bounded() {
            return Err(Error::ModulusBounded(format!("alpha = 1 needs an unbounded modulus, got {m}")));
        }
        m.inverse(3.0 * theta_norm)? / theta_norm * grad_norm
    } else {
        let a = (4.0 * theta_norm / c0).powf(1.0 / (alpha - 1.0));
        a.max(xi0 / theta_norm * grad_norm)
    };
    let delta0 = m.inverse(2.0 * theta_norm / lambda.powf(alpha - 1.0))?;
    Ok(LambdaChoice { lambda, delta0, c0, xi0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    pub n_samples: usize,
    /// Upper end of the sample range when it is unbounded or overflows.
    pub xi_cap: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { n_samples: 256, xi_cap: 1e6 }
    }
}

#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub alpha: f64,
    pub modulus: Modulus,
    pub lambda: f64,
    pub theta_norm: f64,
    pub constants: MocConstants,
    pub xi_samples: Vec<f64>,
    pub omega_vals: Vec<f64>,
    pub omega_prime_vals: Vec<f64>,
    pub big_omega_vals: Vec<f64>,
    pub psi_vals: Vec<f64>,
    pub margins: Vec<f64>,
    pub quad_error_bounds: Vec<f64>,
    /// `lambda * C0` with `omega_lambda(C0) = 3 N`, possibly capped.
    pub xi_max: f64,
    pub xi_max_capped: bool,
    pub case1_pass: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl CertificateReport {
    /// Largest `margin + error bound`; negative iff every sample passes.
    pub fn worst(&self) -> f64 {
        self.margins.iter().zip(&self.quad_error_bounds).map(|(m, e)| m + e).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,omega,omega_prime,Omega,Psi,margin,err_bound\n");
        for i in 0..self.xi_samples.len() {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.xi_samples[i],
                self.omega_vals[i],
                self.omega_prime_vals[i],
                self.big_omega_vals[i],
                self.psi_vals[i],
                self.margins[i],
                self.quad_error_bounds[i]
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "alpha={} modulus={} lambda={} N={} A1={} A2={} B={}\n",
            self.alpha,
            self.modulus,
            self.lambda,
            self.theta_norm,
            self.constants.a1,
            self.constants.a2,
            self.constants.b_alpha
        );
        s.push_str(&format!(
            "samples={} xi_max={}{} worst_margin={:.6e} case1={} pass={}\n",
            self.xi_samples.len(),
            self.xi_max,
            if self.xi_max_capped { " (capped)" } else { "" },
            self.worst(),
            self.case1_pass,
            self.pass
        ));
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

/// Leading-order upper bound on the margin for `xi <= delta / 10`.
fn case1_bound(alpha: f64, xi: f64, delta: f64, c: &MocConstants) -> f64 {
    let pos = xi * (c.a1 + 3.0 * c.a2 + c.a2 * (delta / xi).ln());
    if alpha == 2.0 {
        xi * (c.a1 + 2.0 * c.a2 + c.a2 * (delta / xi).ln()) - 0.75 / xi.sqrt()
    } else {
        pos - 0.75 * c.b_alpha * xi.powf(1.5 - alpha)
    }
}

/// Samples the margin on a log grid up to `lambda C0` and checks its sign.
pub fn certify(
    alpha: f64,
    m: &Modulus,
    lambda: f64,
    theta_norm: f64,
    c: &MocConstants,
    opts: &CertifyOptions,
) -> Result<CertificateReport> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2]")));
    }
    if opts.n_samples < 64 {
        return Err(Error::InvalidArgument(format!("n_samples = {} must be at least 64", opts.n_samples)));
    }
    if !(lambda > 0.0 && theta_norm > 0.0) {
        return Err(Error::InvalidArgument("lambda and theta_norm must be positive".into()));
    }
    c.validate()?;
    let mut notes = Vec::new();
    let target = 3.0 * theta_norm / lambda.powf(alpha - 1.0);
    let (xi_max, capped) = match m.inverse(target) {
        Ok(x) if x.is_finite() && x <= opts.xi_cap => (x, false),
        Ok(_) => {
            notes.push(format!("sample range capped at {} (omega^-1 overflows)", opts.xi_cap));
            (opts.xi_cap, true)
        }
        Err(_) => {
            notes.push(format!("3N/lambda^(alpha-1) = {target} exceeds sup omega; range capped at {}", opts.xi_cap));
            (opts.xi_cap, true)
        }
    };
    let d = m.delta();
    let xi_min = 1e-8 * xi_max.min(d);
    let n = opts.n_samples;
    let ratio = (xi_max / xi_min).ln();
    let mut xs: Vec<f64> = (1..=n).map(|i| xi_min * (ratio * i as f64 / n as f64).exp()).collect();
    xs[n - 1] = xi_max;
    if d > xi_min && d < xi_max {
        xs.push(d);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
    }

    let rows: Vec<Result<[f64; 6]>> = xs
        .par_iter()
        .map(|&xi| {
            let w = m.omega(xi);
            let wp = m.omega_prime(xi);
            let (om, om_err) = omega_eval(m, xi, c);
            let (ps, ps_err) = psi_eval(m, xi, alpha, c)?;
            let margin = if wp == 0.0 { ps } else { om * wp + ps };
            Ok([w, wp, om, ps, margin, om_err * wp.abs() + ps_err])
        })
        .collect();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for r in rows {
        let r = r?;
        for (col, v) in cols.iter_mut().zip(r) {
            col.push(v);
        }
    }
    let [omega_vals, omega_prime_vals, big_omega_vals, psi_vals, margins, errs] = cols;

    let mut case1_pass = true;
    for (i, &xi) in xs.iter().enumerate() {
        if xi > d / 10.0 {
            continue;
        }
        let bound = case1_bound(alpha, xi, d, c);
        if !(bound < 0.0 && margins[i] <= bound + errs[i]) {
            case1_pass = false;
        }
    }
    if m.kind() == ModulusKind::Linear {
        notes.push("linear modulus: margins are reported without a pass guarantee".into());
    }
    let samples_pass = margins.iter().zip(&errs).all(|(m, e)| m + e < 0.0);
    Ok(CertificateReport {
        alpha,
        modulus: *m,
        lambda,
        theta_norm,
        constants: *c,
        xi_samples: xs,
        omega_vals,
        omega_prime_vals,
        big_omega_vals,
        psi_vals,
        margins,
        quad_error_bounds: errs,
        xi_max,
        xi_max_capped: capped,
        case1_pass,
        pass: samples_pass && case1_pass,
        notes,
    })
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub degenerate: bool,
    pub reports: (CertificateReport, CertificateReport),
    pub notes: Vec<String>,
}

impl PairReport {
    pub fn pass(&self) -> bool {
        self.reports.0.pass && self.reports.1.pass
    }
}

/// Certifies one modulus against both exponents of the two-exponent system.
/// `consts` are the constants for the smaller and larger exponent.
pub fn certify_pair(
    alpha: f64,
    beta: f64,
    m: &Modulus,
    lambda: f64,
    theta_norm: f64,
    consts: [MocConstants; 2],
    opts: &CertifyOptions,
) -> Result<PairReport> {
    let (lo, hi) = if alpha <= beta { (alpha, beta) } else { (beta, alpha) };
    if !(lo > 1.0 && hi <= 2.0) {
        return Err(Error::InvalidArgument(format!("exponents ({alpha}, {beta}) must lie in (1, 2]")));
    }
    let mut notes = Vec::new();
    let lam = if lambda < 1.0 {
        notes.push(format!("lambda = {lambda} raised to 1"));
        1.0
    } else {
        lambda
    };
    let first = certify(lo, m, lam, theta_norm, &consts[0], opts)?;
    let degenerate = lo == hi;
    let second = if degenerate {
        notes.push("alpha = beta: single certificate duplicated".into());
        first.clone()
    } else {
        certify(hi, m, lam, theta_norm, &consts[1], opts)?
    };
    Ok(PairReport { alpha: lo, beta: hi, lambda: lam, degenerate, reports: (first, second), notes })
}

/// One point of the parameter search.
#[derive(Clone, Debug)]
pub struct SearchCandidate {
    pub modulus: Modulus,
    pub lambda: LambdaChoice,
    pub report: CertificateReport,
}

/// Moduli tried by [`search_parameters`] for a given exponent.
pub fn search_grid(alpha: f64) -> Vec<Modulus> {
    let mut out = Vec::new();
    if alpha == 1.0 {
        for e in 2..=6 {
            let d = 10f64.powi(-e);
            for g in [d, d / 10.0, d / 100.0] {
                if let Ok(m) = Modulus::moc1(d, g) {
                    out.push(m);
                }
            }
        }
    } else {
        for e in 1..=6 {
            out.push(Modulus::moc_alpha(10f64.powi(-e)).expect("delta in range"));
        }
    }
    out
}

/// Runs [`lambda_select`] and [`certify`] over [`search_grid`] in parallel.
pub fn search_parameters(
    alpha: f64,
    theta_norm: f64,
    grad_norm: f64,
    c: &MocConstants,
    opts: &CertifyOptions,
) -> Result<Vec<SearchCandidate>> {
    search_grid(alpha)
        .par_iter()
        .map(|m| {
            let lambda = lambda_select(theta_norm, grad_norm, alpha, m)?;
            let report = certify(alpha, m, lambda.lambda, theta_norm, c, opts)?;
            Ok(SearchCandidate { modulus: *m, lambda, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        let m = Modulus::moc_alpha(0.1).unwrap();
        let a = lambda_select(1.0, 1.0, 2.0, &m).unwrap();
        assert!((a.c0 - 0.068_377_223_398_316_2).abs() < 1e-14);
        assert!((a.lambda - 4.0 / a.c0).abs() < 1e-12);
        assert!((a.lambda - 58.499).abs() < 1e-3);
        assert!((m.omega(a.delta0) - 2.0 / a.lambda).abs() < 1e-14);
        assert!((a.delta0 - 0.043_152).abs() < 1e-5);
        let b = lambda_select(1.0, 1e6, 2.0, &m).unwrap();
        assert!((b.lambda - 1e5).abs() < 1e-6);
    }

    #[test]
    fn lambda_branch_inequalities() {
        for &alpha in &[1.25, 1.5, 2.0] {
            for &d in &[0.1, 1e-3] {
                let m = Modulus::moc_alpha(d).unwrap();
                for &(n, g) in &[(1.0, 1.0), (0.3, 50.0), (2.0, 1e-3)] {
                    let l = lambda_select(n, g, alpha, &m).unwrap();
                    assert!(l.lambda.powf(alpha - 1.0) > 3.0 * n / l.c0);
                    assert!(l.lambda >= l.xi0 / n * g * (1.0 - 1e-15));
                }
            }
        }
    }

    #[test]
    fn alpha_one_needs_unbounded() {
        let m = Modulus::moc_alpha(0.01).unwrap();
        assert!(matches!(lambda_select(1.0, 1.0, 1.0, &m), Err(Error::ModulusBounded(_))));
        let m = Modulus::moc1(0.01, 0.001).unwrap();
        assert!(lambda_select(0.001, 1.0, 1.0, &m).is_ok());
    }

    #[test]
    fn alpha_two_small_delta_passes() {
        let m = Modulus::moc_alpha(1e-3).unwrap();
        let c = MocConstants::defaults(2.0).unwrap();
        let l = lambda_select(1.0, 1.0, 2.0, &m).unwrap();
        let r = certify(2.0, &m, l.lambda, 1.0, &c, &CertifyOptions::default()).unwrap();
        assert!(r.pass, "{}", r.summary());
        assert!(r.xi_samples.len() >= 256);
    }

    #[test]
    fn linear_smoke() {
        let c = MocConstants::defaults(1.5).unwrap();
        let r = certify(1.5, &Modulus::linear(), 1.0, 1.0, &c, &CertifyOptions::default()).unwrap();
        assert!(!r.pass);
        assert!(r.psi_vals.iter().all(|p| *p <= 0.0));
    }

    #[test]
    fn pair_conventions() {
        let m = Modulus::moc_alpha(1e-3).unwrap();
        let c = [MocConstants::defaults(1.5).unwrap(), MocConstants::defaults(2.0).unwrap()];
        let o = CertifyOptions { n_samples: 64, ..Default::default() };
        let p = certify_pair(2.0, 1.5, &m, 0.5, 1.0, c, &o).unwrap();
        assert_eq!(p.lambda, 1.0);
        assert_eq!((p.alpha, p.beta), (1.5, 2.0));
        assert!(!p.notes.is_empty());
        let d = certify_pair(1.5, 1.5, &m, 10.0, 1.0, c, &o).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.reports.0.margins, d.reports.1.margins);
    }
}
