//! Integrating-factor time stepping and the Picard successive approximation.
//!
//! The linear part `-kappa |D|^a` is integrated exactly by multiplying
//! coefficients with `exp(-kappa h |k|^a)`; the nonlinear term is advanced by
//! an explicit Runge-Kutta rule in the integrating-factor frame.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{nonlinear_term, velocity, DensityState, ModelParams};
use crate::spectral::{semigroup_factors, Grid2D, RealField2D, SpectralField2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    IfEuler,
    IfRk2,
    IfRk4,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::IfEuler, Scheme::IfRk2, Scheme::IfRk4];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::IfEuler => "IFEuler",
            Scheme::IfRk2 => "IFRK2",
            Scheme::IfRk4 => "IFRK4",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Scheme::IfEuler => 1,
            Scheme::IfRk2 => 2,
            Scheme::IfRk4 => 4,
        }
    }

    pub fn stages(self) -> usize {
        match self {
            Scheme::IfEuler => 1,
            Scheme::IfRk2 => 2,
            Scheme::IfRk4 => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Fixed step; `0` selects the CFL step.
    pub dt: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Upper bound on the CFL step; `0.5 min(dx1, dx2)` when absent.
    pub dt_cap: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { scheme: Scheme::IfRk2, dt: 0.0, cfl: 0.5, t_end: 1.0, dt_cap: None }
    }
}

impl StepperConfig {
    pub fn fixed(scheme: Scheme, dt: f64, t_end: f64) -> Self {
        Self { scheme, dt, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be >= 0", self.dt)));
        }
        if self.dt == 0.0 && !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl = {} must lie in (0, 1]", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if let Some(c) = self.dt_cap {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument(format!("dt cap {c} must be positive")));
            }
        }
        Ok(())
    }

    fn cap(&self, grid: &Grid2D) -> f64 {
        self.dt_cap.unwrap_or(0.5 * grid.dx1().min(grid.dx2()))
    }
}

const EPS_U: f64 = 1e-12;

/// `min(cfl dx1 / max|u1|, cfl dx2 / max|u2|, cap)`.
pub fn cfl_dt_from_speed(u1_max: f64, u2_max: f64, dx1: f64, dx2: f64, cfl: f64, cap: f64) -> f64 {
    let a = cfl * dx1 / u1_max.max(EPS_U);
    let b = if u2_max > 0.0 { cfl * dx2 / u2_max.max(EPS_U) } else { f64::INFINITY };
    a.min(b).min(cap)
}

pub fn cfl_dt(state: &DensityState, params: &ModelParams, cfg: &StepperConfig) -> f64 {
    let grid = state.grid();
    let u = velocity(state, params);
    let u2 = u.u2.as_ref().map_or(0.0, |f| f.max_abs());
    cfl_dt_from_speed(u.u1.max_abs(), u2, grid.dx1(), grid.dx2(), cfg.cfl, cfg.cap(grid))
}

type Pair = [SpectralField2D; 2];

struct Factors {
    h: f64,
    full: [Vec<f64>; 2],
    half: [Vec<f64>; 2],
}

impl Factors {
    fn new(grid: &Grid2D, params: &ModelParams, h: f64) -> Result<Self> {
        let (a, b) = params.exponents();
        let k = params.kappa;
        Ok(Self {
            h,
            full: [semigroup_factors(grid, h, k, a)?, semigroup_factors(grid, h, k, b)?],
            half: [semigroup_factors(grid, 0.5 * h, k, a)?, semigroup_factors(grid, 0.5 * h, k, b)?],
        })
    }
}

/// Weight, optional factor table and operand.
type Term<'a> = (f64, Option<&'a [Vec<f64>; 2]>, &'a Pair);

/// `sum_i w_i E_i x_i` per component, `E_i` a factor table or identity.
fn combine(terms: &[Term<'_>]) -> Pair {
    let grid = terms[0].2[0].grid().clone();
    let mut out = [SpectralField2D::zeros(&grid), SpectralField2D::zeros(&grid)];
    for (c, o) in out.iter_mut().enumerate() {
        let dst = o.coeffs_mut();
        for (w, e, x) in terms {
            let src = x[c].coeffs();
            match e {
                Some(e) => {
                    for ((d, s), f) in dst.iter_mut().zip(src).zip(&e[c]) {
                        *d += s * (w * f);
                    }
                }
                None => {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s * *w;
                    }
                }
            }
        }
    }
    out
}

/// One integrating-factor step. `nl(stage, v)` evaluates the nonlinear term
/// at the stage state `v`.
fn if_step(scheme: Scheme, f: &Factors, v: &Pair, mut nl: impl FnMut(usize, &Pair) -> Pair) -> Pair {
    let h = f.h;
    let (e, e2) = (Some(&f.full), Some(&f.half));
    match scheme {
        Scheme::IfEuler => {
            let k1 = nl(0, v);
            combine(&[(1.0, e, v), (h, e, &k1)])
        }
        Scheme::IfRk2 => {
            let k1 = nl(0, v);
            let a = combine(&[(1.0, e, v), (h, e, &k1)]);
            let k2 = nl(1, &a);
            combine(&[(1.0, e, v), (0.5 * h, e, &k1), (0.5 * h, None, &k2)])
        }
        Scheme::IfRk4 => {
            let k1 = nl(0, v);
            let a = combine(&[(1.0, e2, v), (0.5 * h, e2, &k1)]);
            let k2 = nl(1, &a);
            let ev2 = combine(&[(1.0, e2, v)]);
            let b = combine(&[(1.0, None, &ev2), (0.5 * h, None, &k2)]);
            let k3 = nl(2, &b);
            let c = combine(&[(1.0, e2, &ev2), (h, e2, &k3)]);
            let k4 = nl(3, &c);
            let k23 = combine(&[(1.0, None, &k2), (1.0, None, &k3)]);
            combine(&[(1.0, e, v), (h / 6.0, e, &k1), (h / 3.0, e2, &k23), (h / 6.0, None, &k4)])
        }
    }
}

fn pair_is_finite(v: &Pair) -> bool {
    v.iter().all(|f| f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
}

/// Advances one simulation, caching the semigroup factors for repeated steps.
pub struct Stepper {
    params: ModelParams,
    cfg: StepperConfig,
    factors: Option<Factors>,
}

impl Stepper {
    pub fn new(params: ModelParams, cfg: StepperConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        Ok(Self { params, cfg, factors: None })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    fn factors(&mut self, grid: &Grid2D, h: f64) -> Result<&Factors> {
        if self.factors.as_ref().map(|f| f.h) != Some(h) {
            self.factors = Some(Factors::new(grid, &self.params, h)?);
        }
        Ok(self.factors.as_ref().expect("just set"))
    }

    /// Step size the next call to [`Stepper::step`] would take, before clamping.
    pub fn next_dt(&self, state: &DensityState) -> f64 {
        if self.cfg.dt > 0.0 {
            self.cfg.dt
        } else {
            cfl_dt(state, &self.params, &self.cfg)
        }
    }

    /// One step of size `h`.
    pub fn step_by(&mut self, state: &DensityState, h: f64) -> Result<DensityState> {
        let grid = state.grid().clone();
        let params = self.params;
        let scheme = self.cfg.scheme;
        let v = state.to_spectral();
        let f = self.factors(&grid, h)?;
        let out = if_step(scheme, f, &v, |_, x| nonlinear_term(&params, x, x));
        if !pair_is_finite(&out) {
            return Err(Error::NonFinite(format!("non-finite state after step from t = {} with dt = {h}", state.t())));
        }
        Ok(DensityState::from_spectral(&out, state.t() + h))
    }

    pub fn step(&mut self, state: &DensityState) -> Result<DensityState> {
        let h = self.next_dt(state);
        self.step_by(state, h)
    }

    /// Steps until `t_end`, shortening the final step to land on it.
    pub fn advance_to(&mut self, state: &DensityState, t_end: f64) -> Result<DensityState> {
        let mut s = state.clone();
        while s.t() < t_end {
            let remaining = t_end - s.t();
            let mut h = self.next_dt(&s);
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
            }
            s = self.step_by(&s, h)?;
            if (t_end - s.t()).abs() <= 1e-14 * t_end.abs() {
                s.set_t(t_end);
            }
        }
        Ok(s)
    }
}

/// Single step with a fresh stepper.
pub fn step(state: &DensityState, params: &ModelParams, cfg: &StepperConfig) -> Result<DensityState> {
    Stepper::new(*params, *cfg)?.step(state)
}

/// `n_steps` equal steps covering a time span `t_end`.
///
/// The state stays in Fourier space between steps, so the result is
/// bitwise the fixed point of [`picard_solve`] with the same step count.
pub fn integrate_fixed(
    state: &DensityState,
    params: &ModelParams,
    scheme: Scheme,
    t_end: f64,
    n_steps: usize,
) -> Result<DensityState> {
    params.validate()?;
    if n_steps == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("need n_steps > 0 and t_end > 0, got {n_steps} and {t_end}")));
    }
    let h = t_end / n_steps as f64;
    let factors = Factors::new(state.grid(), params, h)?;
    let mut v = state.to_spectral();
    for step in 0..n_steps {
        v = if_step(scheme, &factors, &v, |_, x| nonlinear_term(params, x, x));
        if !pair_is_finite(&v) {
            return Err(Error::NonFinite(format!("non-finite state at step {step} of {n_steps}")));
        }
    }
    Ok(DensityState::from_spectral(&v, state.t() + t_end))
}

/// Successive approximations and their sup-in-time `L^p` differences.
#[derive(Clone, Debug)]
pub struct PicardTrace {
    /// Iterate `n` at the final time; index 0 is the free semigroup.
    pub iterates: Vec<DensityState>,
    /// `deltas[n] = sup_t (||plus_{n+1} - plus_n||_p + ||minus_{n+1} - minus_n||_p)`.
    pub deltas: Vec<f64>,
    pub p: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Deltas grew over three consecutive iterations.
    pub diverged: bool,
}

impl PicardTrace {
    /// `deltas[n+1] / deltas[n]`, NaN where the denominator vanishes.
    pub fn ratios(&self) -> Vec<f64> {
        self.deltas.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN }).collect()
    }
}

fn lp_pair_diff(a: &[RealField2D; 2], b: &[RealField2D; 2], p: f64) -> f64 {
    (0..2).map(|c| a[c].zip_map(&b[c], |x, y| x - y).lp_norm(p)).sum()
}

/// Picard iteration on `[0, T]`.
///
/// Iterate `n + 1` solves the linear transport-diffusion problem whose
/// velocity is taken from iterate `n`, evaluated at the same Runge-Kutta
/// stage states; its fixed point is the direct nonlinear discretisation.
pub fn picard_solve(
    init: &DensityState,
    params: &ModelParams,
    t_final: f64,
    n_iters: usize,
    p: f64,
    cfg: &StepperConfig,
) -> Result<PicardTrace> {
    params.validate()?;
    cfg.validate()?;
    if !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("T = {t_final} must be positive")));
    }
    if n_iters < 2 {
        return Err(Error::InvalidArgument(format!("n_iters = {n_iters} must be >= 2")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    let dt0 = if cfg.dt > 0.0 { cfg.dt } else { cfl_dt(init, params, cfg) };
    let n_steps = (t_final / dt0).ceil().max(1.0) as usize;
    let h = t_final / n_steps as f64;
    let grid = init.grid().clone();
    let factors = Factors::new(&grid, params, h)?;
    let stages = cfg.scheme.stages();

    let to_real = |v: &Pair| [v[0].to_real(), v[1].to_real()];

    // iterate 0: the free semigroup, recorded at every stage
    let run = |source: Option<&Vec<Pair>>| -> Result<(Vec<Pair>, Vec<[RealField2D; 2]>)> {
        let mut v = init.to_spectral();
        let mut stage_states = Vec::with_capacity(n_steps * stages);
        let mut ends = Vec::with_capacity(n_steps + 1);
        ends.push(to_real(&v));
        for step in 0..n_steps {
            v = if_step(cfg.scheme, &factors, &v, |s, x| {
                stage_states.push(x.clone());
                match source {
                    Some(src) => nonlinear_term(params, x, &src[step * stages + s]),
                    None => [SpectralField2D::zeros(&grid), SpectralField2D::zeros(&grid)],
                }
            });
            if !pair_is_finite(&v) {
                return Err(Error::NonFinite(format!("Picard iterate blew up at step {step}")));
            }
            ends.push(to_real(&v));
        }
        Ok((stage_states, ends))
    };

    let (mut prev_stages, mut prev_ends) = run(None)?;
    let mut iterates = vec![DensityState::new_unchecked(
        prev_ends[n_steps][0].clone(),
        prev_ends[n_steps][1].clone(),
        init.t() + t_final,
    )];
    let mut deltas = Vec::with_capacity(n_iters);
    let mut growth = 0;
    let mut diverged = false;
    for _ in 0..n_iters {
        let (stages_n, ends_n) = run(Some(&prev_stages))?;
        let d = ends_n.iter().zip(&prev_ends).map(|(a, b)| lp_pair_diff(a, b, p)).fold(0.0_f64, f64::max);
        if let Some(&last) = deltas.last() {
            if d > last {
                growth += 1;
                if growth >= 3 {
                    diverged = true;
                }
            } else {
                growth = 0;
            }
        }
        deltas.push(d);
        iterates.push(DensityState::new_unchecked(
            ends_n[n_steps][0].clone(),
            ends_n[n_steps][1].clone(),
            init.t() + t_final,
        ));
        prev_stages = stages_n;
        prev_ends = ends_n;
    }
    Ok(PicardTrace { iterates, deltas, p, dt: h, n_steps, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use crate::spectral::fractional_semigroup;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::square(n, 2.0 * PI).unwrap()
    }

    fn smooth_state(g: &Grid2D, amp: f64) -> DensityState {
        let p = RealField2D::from_fn(g, |x, y| amp * (x.cos() + (y + 0.3).sin()).exp() * 0.3);
        let m = RealField2D::from_fn(g, |x, y| amp * 0.2 * ((x - y).cos() + 1.0));
        DensityState::new(p, m, 0.0).unwrap()
    }

    #[test]
    fn linear_step_is_exact() {
        let g = grid(32);
        let f = RealField2D::from_fn(&g, |x, _| (2.0 * x).sin());
        let s = DensityState::new(f.clone(), RealField2D::zeros(&g), 0.0).unwrap();
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.0).without_advection();
        for scheme in Scheme::ALL {
            let cfg = StepperConfig::fixed(scheme, 0.1, 1.0);
            let out = step(&s, &params, &cfg).unwrap();
            let expect = f.scaled((-0.2f64).exp());
            assert!(out.plus().max_diff(&expect) < 1e-14, "{scheme}");
            assert!((out.t() - 0.1).abs() < 1e-16);
        }
    }

    #[test]
    fn linear_step_equals_semigroup() {
        let g = grid(32);
        let s = smooth_state(&g, 1.0);
        let params = ModelParams::new(Variant::GeneralizedTheta, 0.7, 1.3).with_beta(0.6).without_advection();
        for scheme in Scheme::ALL {
            let out = step(&s, &params, &StepperConfig::fixed(scheme, 0.05, 1.0)).unwrap();
            let ep = fractional_semigroup(s.plus(), 0.05, 0.7, 1.3).unwrap();
            let em = fractional_semigroup(s.minus(), 0.05, 0.7, 0.6).unwrap();
            assert!(out.plus().max_diff(&ep) < 1e-14);
            assert!(out.minus().max_diff(&em) < 1e-14);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid(16);
        let s = DensityState::zeros(&g);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        let out = step(&s, &params, &StepperConfig::fixed(Scheme::IfRk4, 0.1, 1.0)).unwrap();
        assert_eq!(out.linf(), 0.0);
    }

    #[test]
    fn cfl_formula() {
        assert!((cfl_dt_from_speed(2.0, 0.0, 0.1, 0.1, 0.5, 1e9) - 0.025).abs() < 1e-16);
        assert_eq!(cfl_dt_from_speed(0.0, 0.0, 0.1, 0.1, 0.5, 0.07), 0.07);
    }

    #[test]
    fn cfl_quiescent_and_resolution() {
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        let cfg = StepperConfig { dt_cap: Some(1e9), ..Default::default() };
        let g = grid(32);
        let s = DensityState::zeros(&g);
        assert_eq!(cfl_dt(&s, &params, &StepperConfig { dt_cap: Some(0.3), ..cfg }), 0.3);
        let a = cfl_dt(&smooth_state(&grid(32), 1.0), &params, &cfg);
        let b = cfl_dt(&smooth_state(&grid(64), 1.0), &params, &cfg);
        assert!((a / b - 2.0).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn dissipation_decreases_l2() {
        let g = grid(32);
        let mut s = smooth_state(&g, 1.0);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 0.8).without_advection();
        let mut st = Stepper::new(params, StepperConfig::fixed(Scheme::IfRk2, 0.05, 1.0)).unwrap();
        for _ in 0..10 {
            let next = st.step(&s).unwrap();
            assert!(next.plus().l2_norm() <= s.plus().l2_norm());
            s = next;
        }
    }

    #[test]
    fn nan_is_reported() {
        let g = grid(16);
        let mut f = RealField2D::zeros(&g);
        f.values_mut()[3] = f64::NAN;
        let s = DensityState::new_unchecked(f, RealField2D::zeros(&g), 0.0);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        let err = step(&s, &params, &StepperConfig::fixed(Scheme::IfEuler, 0.1, 1.0));
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn advance_lands_on_t_end() {
        let g = grid(16);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        let mut st = Stepper::new(params, StepperConfig::fixed(Scheme::IfRk2, 0.03, 0.1)).unwrap();
        let out = st.advance_to(&smooth_state(&g, 0.5), 0.1).unwrap();
        assert_eq!(out.t(), 0.1);
    }

    #[test]
    fn picard_zero_data() {
        let g = grid(16);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        let tr = picard_solve(
            &DensityState::zeros(&g),
            &params,
            0.05,
            3,
            1.5,
            &StepperConfig::fixed(Scheme::IfRk2, 0.01, 0.05),
        )
        .unwrap();
        assert!(tr.deltas.iter().all(|d| *d == 0.0));
        assert!(tr.iterates.iter().all(|s| s.linf() == 0.0));
    }

    #[test]
    fn picard_fixed_point_is_direct_solve() {
        let g = grid(32);
        let s = smooth_state(&g, 1.0);
        let params = ModelParams::new(Variant::ThetaForm, 1.0, 1.5);
        for scheme in Scheme::ALL {
            let cfg = StepperConfig::fixed(scheme, 0.01, 0.05);
            let tr = picard_solve(&s, &params, 0.05, 12, 1.5, &cfg).unwrap();
            let direct = integrate_fixed(&s, &params, scheme, 0.05, tr.n_steps).unwrap();
            let last = tr.iterates.last().unwrap();
            let diff = last.plus().max_diff(direct.plus()).max(last.minus().max_diff(direct.minus()));
            assert!(diff < 1e-15, "{scheme}: {diff} {:?}", tr.deltas);
            assert!(!tr.diverged);
        }
    }
}
