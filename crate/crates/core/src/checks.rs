//! Operator and convergence checks shared by the CLI and the test suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::diagnostics::bernstein_ratio;
use crate::error::Result;
use crate::kernels::{dalpha_integral, kernel_closed_form, kernel_k, DalphaOptions, Gaussian2D};
use crate::model::{
    direct_convolution, init_data, sqg_state_from_theta, theta_from_sqg_state, DensityState, InitKind, InitParams,
    ModelParams, Variant,
};
use crate::spectral::{
    apply_fractional_laplacian, apply_multiplier, dealias, in_dyadic_block, Grid2D, RealField2D, SpectralField2D,
    SymbolId,
};
use crate::stepper::{integrate_fixed, picard_solve, Scheme, Stepper, StepperConfig};

/// Outcome of one check: `passed` iff `value` meets `threshold` in the
/// direction the check documents.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: value={:.4e} threshold={:.4e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold,
            self.detail
        )
    }
}

/// Random non-Nyquist cosines through every symbol; worst error relative to `|symbol|`.
pub fn multiplier_exactness(n: usize, n_modes: usize, seed: u64) -> Result<CheckResult> {
    let g = Grid2D::square(n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (n / 2) as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..n_modes {
        let m1 = rng.gen_range(-half + 1..half);
        let m2 = rng.gen_range(-half + 1..half);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let (k1, k2) = (m1 as f64, m2 as f64);
        // phases from exact integer arithmetic so the reference carries no
        // argument roundoff
        let nn = n as i64;
        let angle = |j1: usize, j2: usize| {
            let m = (m1 * j1 as i64 + m2 * j2 as i64).rem_euclid(nn);
            2.0 * PI * m as f64 / n as f64 + phase
        };
        let sample = |h: &dyn Fn(f64) -> f64| {
            let mut v = Vec::with_capacity(g.len());
            for j2 in 0..n {
                for j1 in 0..n {
                    v.push(h(angle(j1, j2)));
                }
            }
            RealField2D::from_values(&g, v)
        };
        let f = sample(&|a| a.cos())?;
        for sym in SymbolId::ALL {
            let s = sym.eval(k1, k2);
            let out = apply_multiplier(&f, sym);
            let expect = sample(&|a| s.re * a.cos() - s.im * a.sin())?;
            let scale = if s.norm() == 0.0 { 1.0 } else { s.norm() };
            worst = worst.max(out.max_diff(&expect) / scale);
        }
    }
    Ok(CheckResult::at_most(
        "multiplier exactness",
        worst,
        1e-12,
        format!("{n_modes} modes x {} symbols on {n}^2", SymbolId::ALL.len()),
    ))
}

/// Spectral `|D|^alpha` of a Gaussian against the singular integral at a
/// 5 x 5 patch of grid points around its centre.
pub fn operator_cross_oracle(n: usize, length: f64, sigma: f64, alphas: &[f64]) -> Result<CheckResult> {
    let g = Grid2D::square(n, length)?;
    let c = [0.5 * length, 0.5 * length];
    let f = RealField2D::from_fn(&g, |x, y| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (2.0 * sigma * sigma)).exp());
    let gauss = Gaussian2D { amplitude: 1.0, center: c, width: sigma * 2f64.sqrt() };
    let mut points = Vec::new();
    for i in -2i64..=2 {
        for j in -2i64..=2 {
            points.push(((n as i64 / 2 + 2 * i) as usize, (n as i64 / 2 + 2 * j) as usize));
        }
    }
    let mut worst: f64 = 0.0;
    for &alpha in alphas {
        let d = apply_fractional_laplacian(&f, alpha)?;
        let errs: Vec<Result<f64>> = points
            .par_iter()
            .map(|&(j1, j2)| {
                let (x, y) = g.coords(j1, j2);
                let r = dalpha_integral(&gauss, [x, y], alpha, sigma, DalphaOptions::default())?;
                Ok(((d.get(j1, j2) - r.value) / r.value).abs())
            })
            .collect();
        for e in errs {
            worst = worst.max(e?);
        }
    }
    Ok(CheckResult::at_most(
        "operator cross-oracle",
        worst,
        1e-3,
        format!("alpha in {alphas:?}, {} points, {n}^2 box {length:.3}", points.len()),
    ))
}

/// Kernel samples against the Poisson and heat closed forms, plus positivity.
pub fn kernel_checks() -> Result<Vec<CheckResult>> {
    let radii: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let t1 = kernel_k(1.0, &radii)?;
    let rel1 = radii
        .iter()
        .zip(&t1.values)
        .map(|(r, v)| {
            let e = kernel_closed_form(1.0, *r).expect("closed form");
            ((v - e) / e).abs()
        })
        .fold(0.0, f64::max);
    let t2 = kernel_k(2.0, &radii)?;
    let peak = kernel_closed_form(2.0, 0.0).expect("closed form");
    let rel2 = radii
        .iter()
        .zip(&t2.values)
        .map(|(r, v)| (v - kernel_closed_form(2.0, *r).expect("closed form")).abs() / peak)
        .fold(0.0, f64::max);
    let min = [0.5, 1.5]
        .iter()
        .map(|&a| kernel_k(a, &radii).map(|t| t.values.iter().copied().fold(f64::INFINITY, f64::min)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        CheckResult::at_most("kernel alpha=1 vs Poisson", rel1, 1e-4, "relative, |y| <= 10".into()),
        CheckResult::at_most("kernel alpha=2 vs heat", rel2, 1e-6, "relative to the peak, |y| <= 10".into()),
        CheckResult::at_least("kernel positivity", min, -1e-8, "alpha in {0.5, 1.5}, |y| <= 10".into()),
    ])
}

/// Dealiased products of random trigonometric polynomials against direct
/// convolution of their coefficients.
pub fn product_check(n: usize, seed: u64) -> Result<CheckResult> {
    let g = Grid2D::square(n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = || {
        let f = RealField2D::from_fn(&g, |_, _| 0.0);
        let mut hat = f.to_spectral();
        for c in hat.coeffs_mut() {
            *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        // real part keeps a Hermitian spectrum
        dealias(&hat.to_real().to_spectral())
    };
    let (a, b) = (random(), random());
    let prod = a.to_real().zip_map(&b.to_real(), |x, y| x * y).to_spectral();
    let fast = dealias(&prod);
    let slow = dealias(&direct_convolution(&a, &b));
    let scale = slow.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let err = fast.coeffs().iter().zip(slow.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale;
    Ok(CheckResult::at_most("dealiased product", err, 1e-12, format!("{n}^2 random dealiased fields")))
}

/// Real field with random coefficients on the sharp annulus `j`.
pub fn annulus_field(g: &Grid2D, j: i32, rng: &mut impl Rng) -> RealField2D {
    let mut c = vec![Complex64::new(0.0, 0.0); g.len()];
    for j2 in 0..g.n2() {
        for j1 in 0..g.n1() {
            if in_dyadic_block(g.kmag(j1, j2), j) && !g.is_nyquist1(j1) && !g.is_nyquist2(j2) {
                c[g.index(j1, j2)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    SpectralField2D::from_coeffs(g, c).expect("grid sized").to_real()
}

/// Bernstein ratios on random annulus fields.
///
/// For `p = q` the ratio is held to the two-sided band `[1/8, 8]`. For
/// `p < q` the inequality only bounds it from above, so only `<= 8` is
/// required there.
pub fn bernstein_band(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let g = Grid2D::square(64, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inf = f64::INFINITY;
    let same = [(1.0, 1.0), (2.0, 2.0), (inf, inf)];
    let mixed = [(1.0, 2.0), (2.0, inf), (1.0, inf)];
    let (mut lo, mut hi_same, mut hi_mixed) = (f64::INFINITY, 0.0_f64, 0.0_f64);
    for _ in 0..trials {
        let j = rng.gen_range(1..=4);
        let f = annulus_field(&g, j, &mut rng);
        for k in [0.0, 1.0, 2.0] {
            for &(p, q) in &same {
                let r = bernstein_ratio(&f, j, k, p, q)?;
                lo = lo.min(r);
                hi_same = hi_same.max(r);
            }
            for &(p, q) in &mixed {
                hi_mixed = hi_mixed.max(bernstein_ratio(&f, j, k, p, q)?);
            }
        }
    }
    Ok(vec![
        CheckResult::at_least("Bernstein p=q lower", lo, 0.125, format!("{trials} fields, j in 1..=4, k in {{0,1,2}}")),
        CheckResult::at_most("Bernstein p=q upper", hi_same, 8.0, "p = q in {1, 2, inf}".into()),
        CheckResult::at_most("Bernstein p<q upper", hi_mixed, 8.0, "(p, q) in {(1,2), (2,inf), (1,inf)}".into()),
    ])
}

/// Smooth periodic Gaussian data on the `2 pi` box used by the time studies.
pub fn smooth_test_state(n: usize, amplitude: f64) -> Result<DensityState> {
    let g = Grid2D::square(n, 2.0 * PI)?;
    let p = InitParams { amplitude, amplitude_minus: 0.5 * amplitude, sigma: 2.0 * PI / 12.0, ..Default::default() };
    init_data(&g, InitKind::SeparableGaussian, &p)
}

fn pair_l2(a: &DensityState, b: &DensityState) -> f64 {
    let dp = a.plus().try_sub(b.plus()).expect("same grid").l2_norm();
    let dm = a.minus().try_sub(b.minus()).expect("same grid").l2_norm();
    dp.hypot(dm)
}

/// Observed order `log2(|u_n - u_2n| / |u_2n - u_4n|)` for `n = base_steps`.
pub fn richardson_order(scheme: Scheme, base_steps: usize, t_end: f64) -> Result<f64> {
    let s = smooth_test_state(64, 1.0)?;
    let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
    let runs: Vec<Result<DensityState>> = [base_steps, 2 * base_steps, 4 * base_steps]
        .par_iter()
        .map(|&n| integrate_fixed(&s, &params, scheme, t_end, n))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((pair_l2(&runs[0], &runs[1]) / pair_l2(&runs[1], &runs[2])).log2())
}

pub fn richardson_checks() -> Result<Vec<CheckResult>> {
    let cases = [(Scheme::IfEuler, 32, 0.8, 1.2), (Scheme::IfRk2, 16, 1.8, 2.2), (Scheme::IfRk4, 4, 3.5, 4.5)];
    cases
        .iter()
        .map(|&(scheme, n, lo, hi)| {
            let order = richardson_order(scheme, n, 0.5)?;
            Ok(CheckResult {
                name: format!("{scheme} order"),
                passed: order >= lo && order <= hi,
                value: order,
                threshold: lo,
                detail: format!("expected [{lo}, {hi}], steps {n}/{}/{}", 2 * n, 4 * n),
            })
        })
        .collect()
}

/// `error(64) / error(128)` against a 256^2 reference for Gaussian data at `t = 0.25`.
pub fn spatial_convergence() -> Result<CheckResult> {
    let solve = |n: usize| -> Result<DensityState> {
        let g = Grid2D::square(n, 8.0 * PI)?;
        let s = init_data(&g, InitKind::SeparableGaussian, &InitParams::default())?;
        integrate_fixed(&s, &ModelParams::new(Variant::ThetaForm, 1.0, 1.5), Scheme::IfRk4, 0.25, 50)
    };
    let sols: Vec<Result<DensityState>> = [64usize, 128, 256].par_iter().map(|&n| solve(n)).collect();
    let sols = sols.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = &sols[2];
    let err = |a: &DensityState| {
        let stride = reference.grid().n1() / a.grid().n1();
        let mut e: f64 = 0.0;
        for j2 in 0..a.grid().n2() {
            for j1 in 0..a.grid().n1() {
                let (r1, r2) = (j1 * stride, j2 * stride);
                e = e.max((a.plus().get(j1, j2) - reference.plus().get(r1, r2)).abs());
                e = e.max((a.minus().get(j1, j2) - reference.minus().get(r1, r2)).abs());
            }
        }
        e
    };
    let (e64, e128) = (err(&sols[0]), err(&sols[1]));
    Ok(CheckResult::at_least(
        "spatial refinement",
        e64 / e128,
        10.0,
        format!("error(64) = {e64:.3e}, error(128) = {e128:.3e}"),
    ))
}

/// Picard iteration on small data: contraction ratios for iterations 2..=6
/// and agreement of the last iterate with the direct solve.
pub fn picard_checks() -> Result<Vec<CheckResult>> {
    let s = smooth_test_state(64, 0.1)?;
    let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
    let t = 0.05;
    let cfg = StepperConfig::fixed(Scheme::IfRk2, 0.005, t);
    let trace = picard_solve(&s, &params, t, 7, 2.0, &cfg)?;
    // iteration n has delta deltas[n - 1]
    let worst_ratio = trace.ratios()[..5].iter().map(|r| if r.is_nan() { 0.0 } else { *r }).fold(0.0, f64::max);
    let direct = integrate_fixed(&s, &params, Scheme::IfRk2, t, trace.n_steps)?;
    let last = trace.iterates.last().expect("iterates");
    let mismatch = pair_l2(last, &direct);
    let final_delta = *trace.deltas.last().expect("deltas");
    Ok(vec![
        CheckResult::at_most("Picard ratio", worst_ratio, 0.9, format!("deltas {:?}", trace.deltas)),
        CheckResult::at_most(
            "Picard limit",
            mismatch,
            10.0 * final_delta,
            format!("|last - direct| in L2, final delta {final_delta:.3e}"),
        ),
    ])
}

/// Theta form with `theta- = 0` against the reduced SQG evolution of its primitive.
pub fn reduction_consistency(n: usize, t_end: f64, n_steps: usize) -> Result<CheckResult> {
    let g = Grid2D::square(n, 2.0 * PI)?;
    let p = InitParams { amplitude_minus: 0.0, sigma: 2.0 * PI / 12.0, ..Default::default() };
    let theta = init_data(&g, InitKind::SeparableGaussian, &p)?;
    let sqg = sqg_state_from_theta(theta.plus(), 0.0);
    let h = t_end / n_steps as f64;
    let cfg = StepperConfig::fixed(Scheme::IfRk4, h, t_end);
    let mut a = Stepper::new(ModelParams::new(Variant::ThetaForm, 1.0, 1.5), cfg)?;
    let mut b = Stepper::new(ModelParams::new(Variant::SqgReduced, 1.0, 1.5), cfg)?;
    let (mut sa, mut sb) = (theta, sqg);
    let mut worst: f64 = 0.0;
    for step in 0..=n_steps {
        let rebuilt = theta_from_sqg_state(&sb);
        worst = worst.max(rebuilt.max_diff(sa.plus()) / sa.plus().max_abs());
        if step < n_steps {
            sa = a.step_by(&sa, h)?;
            sb = b.step_by(&sb, h)?;
        }
    }
    Ok(CheckResult::at_most(
        "reduction consistency",
        worst,
        1e-6,
        format!("max_t |d1 rho - theta+|_inf / |theta+|_inf, t in [0, {t_end}]"),
    ))
}

/// The operator suite run by `gbsim opcheck`.
pub fn opcheck_suite() -> Result<Vec<CheckResult>> {
    let mut out = vec![multiplier_exactness(64, 20, 11)?, product_check(32, 5)?];
    out.extend(kernel_checks()?);
    out.push(operator_cross_oracle(512, 16.0 * PI, 0.5, &[0.5, 1.0, 1.5])?);
    out.extend(bernstein_band(100, 3)?);
    Ok(out)
}

/// The studies run by `gbsim convergence`.
pub fn convergence_suite() -> Result<Vec<CheckResult>> {
    let mut out = richardson_checks()?;
    out.push(spatial_convergence()?);
    out.extend(picard_checks()?);
    out.push(reduction_consistency(64, 0.5, 100)?);
    Ok(out)
}
