//! State, velocity laws and tendencies for every system variant.
//!
//! The two field slots of [`DensityState`] mean different things per variant:
//!
//! | variant            | `plus`            | `minus`                         |
//! |--------------------|-------------------|---------------------------------|
//! | `ThetaForm`        | theta+            | theta-                          |
//! | `GeneralizedTheta` | theta+            | theta- (dissipated with beta)   |
//! | `RhoForm`          | rho+ (periodic)   | rho- (periodic)                 |
//! | `SqgReduced`       | periodic part of rho | row slope `S(x2)` of rho     |
//! | `SqgTrue`          | rho               | unused                          |
//!
//! For `SqgReduced` the full scalar is `rho = rho_p + x1 S(x2)`, so
//! `d1 rho = d1 rho_p + S` is the density of the matching theta-form run. The
//! slope only feels dissipation because `R1^2 R2^2` annihilates `k1 = 0` modes.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::snapshot::Snapshot;
use crate::spectral::{
    dealias, dealias_in_place, fractional_laplacian_in_place, multiply_in_place, partial1_in_place, partial2_in_place,
    Grid2D, RealField2D, SpectralField2D, SymbolId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    ThetaForm,
    RhoForm,
    SqgReduced,
    SqgTrue,
    GeneralizedTheta,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::ThetaForm, Variant::RhoForm, Variant::SqgReduced, Variant::SqgTrue, Variant::GeneralizedTheta];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ThetaForm => "ThetaForm",
            Variant::RhoForm => "RhoForm",
            Variant::SqgReduced => "SQGReduced",
            Variant::SqgTrue => "SQGTrue",
            Variant::GeneralizedTheta => "GeneralizedTheta",
        }
    }

    pub fn is_sqg(self) -> bool {
        matches!(self, Variant::SqgReduced | Variant::SqgTrue)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub kappa: f64,
    pub alpha: f64,
    /// Dissipation exponent of the minus component, `GeneralizedTheta` only.
    pub beta: Option<f64>,
    /// When false the nonlinear term is dropped (pure dissipation).
    pub advection: bool,
}

impl ModelParams {
    pub fn new(variant: Variant, kappa: f64, alpha: f64) -> Self {
        Self { variant, kappa, alpha, beta: None, advection: true }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn without_advection(mut self) -> Self {
        self.advection = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa = {} must be >= 0", self.kappa)));
        }
        let in_range = |a: f64| a > 0.0 && a <= 2.0;
        if !in_range(self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {} must lie in (0, 2]", self.alpha)));
        }
        if self.variant == Variant::GeneralizedTheta {
            match self.beta {
                None => return Err(Error::InvalidArgument("GeneralizedTheta requires beta".into())),
                Some(b) if !in_range(b) => {
                    return Err(Error::InvalidArgument(format!("beta = {b} must lie in (0, 2]")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// GeneralizedTheta with `alpha == beta` is just ThetaForm.
    pub fn is_degenerate(&self) -> bool {
        self.variant == Variant::GeneralizedTheta && self.beta == Some(self.alpha)
    }

    /// Dissipation exponents of the two slots.
    pub fn exponents(&self) -> (f64, f64) {
        match (self.variant, self.beta) {
            (Variant::GeneralizedTheta, Some(b)) => (self.alpha, b),
            _ => (self.alpha, self.alpha),
        }
    }
}

/// The pair of evolved fields at time `t`.
#[derive(Clone, Debug)]
pub struct DensityState {
    plus: RealField2D,
    minus: RealField2D,
    t: f64,
}

impl DensityState {
    pub fn new(plus: RealField2D, minus: RealField2D, t: f64) -> Result<Self> {
        if plus.grid() != minus.grid() {
            return Err(Error::GridMismatch);
        }
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("state contains non-finite samples".into()));
        }
        Ok(Self { plus, minus, t })
    }

    pub(crate) fn new_unchecked(plus: RealField2D, minus: RealField2D, t: f64) -> Self {
        Self { plus, minus, t }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self { plus: RealField2D::zeros(grid), minus: RealField2D::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Grid2D {
        self.plus.grid()
    }
    pub fn plus(&self) -> &RealField2D {
        &self.plus
    }
    pub fn minus(&self) -> &RealField2D {
        &self.minus
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn is_finite(&self) -> bool {
        self.plus.is_finite() && self.minus.is_finite()
    }

    pub fn into_fields(self) -> (RealField2D, RealField2D) {
        (self.plus, self.minus)
    }

    pub fn to_spectral(&self) -> [SpectralField2D; 2] {
        [self.plus.to_spectral(), self.minus.to_spectral()]
    }

    pub fn from_spectral(fields: &[SpectralField2D; 2], t: f64) -> Self {
        Self { plus: fields[0].to_real(), minus: fields[1].to_real(), t }
    }

    /// `max(||plus||_inf, ||minus||_inf)`.
    pub fn linf(&self) -> f64 {
        self.plus.max_abs().max(self.minus.max_abs())
    }
}

/// Velocity field; `u2` is present only for the true SQG law.
#[derive(Clone, Debug)]
pub struct Velocity {
    pub u1: RealField2D,
    pub u2: Option<RealField2D>,
}

impl Velocity {
    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.u2.as_ref().map_or(0.0, |u| u.max_abs()))
    }
}

fn multiplied(f: &SpectralField2D, sym: SymbolId) -> SpectralField2D {
    let mut out = f.clone();
    multiply_in_place(&mut out, sym);
    out
}

fn difference(a: &SpectralField2D, b: &SpectralField2D) -> SpectralField2D {
    let coeffs = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
    SpectralField2D::from_coeffs(a.grid(), coeffs).expect("same grid")
}

fn sum(a: &SpectralField2D, b: &SpectralField2D) -> SpectralField2D {
    let coeffs = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect();
    SpectralField2D::from_coeffs(a.grid(), coeffs).expect("same grid")
}

fn d1(f: &SpectralField2D) -> SpectralField2D {
    let mut out = f.clone();
    partial1_in_place(&mut out);
    out
}

fn d2(f: &SpectralField2D) -> SpectralField2D {
    let mut out = f.clone();
    partial2_in_place(&mut out);
    out
}

/// Velocity in spectral form from (already dealiased) source fields.
fn velocity_spectral(variant: Variant, src: &[SpectralField2D; 2]) -> (SpectralField2D, Option<SpectralField2D>) {
    match variant {
        Variant::ThetaForm | Variant::GeneralizedTheta => {
            (multiplied(&difference(&src[0], &src[1]), SymbolId::VelTheta), None)
        }
        Variant::RhoForm => (multiplied(&difference(&src[0], &src[1]), SymbolId::RieszSq), None),
        Variant::SqgReduced => (multiplied(&src[0], SymbolId::RieszSq), None),
        Variant::SqgTrue => (multiplied(&src[0], SymbolId::SqgU1), Some(multiplied(&src[0], SymbolId::SqgU2))),
    }
}

/// Velocity field of `state` as used by the tendency (inputs dealiased).
pub fn velocity(state: &DensityState, params: &ModelParams) -> Velocity {
    let src = state.to_spectral().map(|f| dealias(&f));
    let (u1, u2) = velocity_spectral(params.variant, &src);
    Velocity { u1: u1.to_real(), u2: u2.map(|u| u.to_real()) }
}

fn times(a: &RealField2D, b: &RealField2D) -> SpectralField2D {
    a.zip_map(b, |x, y| x * y).to_spectral()
}

fn finish(mut f: SpectralField2D, sign: f64) -> SpectralField2D {
    dealias_in_place(&mut f);
    if sign != 1.0 {
        for c in f.coeffs_mut() {
            *c *= sign;
        }
    }
    f
}

/// Nonlinear tendency of `fields` with the velocity built from `source`.
///
/// Both factors of every product are dealiased, the product is formed in
/// physical space and the result is dealiased again. Passing the same pair
/// twice gives the ordinary nonlinear term; a different `source` gives the
/// frozen-velocity (linear transport) term.
pub fn nonlinear_term(
    params: &ModelParams,
    fields: &[SpectralField2D; 2],
    source: &[SpectralField2D; 2],
) -> [SpectralField2D; 2] {
    let grid = fields[0].grid().clone();
    if !params.advection {
        return [SpectralField2D::zeros(&grid), SpectralField2D::zeros(&grid)];
    }
    let src = [dealias(&source[0]), dealias(&source[1])];
    let f = [dealias(&fields[0]), dealias(&fields[1])];
    let (u1_hat, u2_hat) = velocity_spectral(params.variant, &src);
    let u1 = u1_hat.to_real();
    match params.variant {
        Variant::ThetaForm | Variant::GeneralizedTheta => {
            let plus = d1(&times(&u1, &f[0].to_real()));
            let minus = d1(&times(&u1, &f[1].to_real()));
            [finish(plus, -1.0), finish(minus, 1.0)]
        }
        Variant::RhoForm => {
            let plus = times(&u1, &d1(&f[0]).to_real());
            let minus = times(&u1, &d1(&f[1]).to_real());
            [finish(plus, -1.0), finish(minus, 1.0)]
        }
        Variant::SqgReduced => {
            let grad1 = sum(&d1(&f[0]), &f[1]).to_real();
            [finish(times(&u1, &grad1), -1.0), SpectralField2D::zeros(&grid)]
        }
        Variant::SqgTrue => {
            let u2 = u2_hat.expect("SQG velocity has two components").to_real();
            let a = times(&u1, &d1(&f[0]).to_real());
            let b = times(&u2, &d2(&f[0]).to_real());
            [finish(sum(&a, &b), -1.0), SpectralField2D::zeros(&grid)]
        }
    }
}

/// Full tendency `(d_t plus, d_t minus)`: nonlinear term plus dissipation.
pub fn rhs(state: &DensityState, params: &ModelParams) -> Result<(RealField2D, RealField2D)> {
    params.validate()?;
    let hat = state.to_spectral();
    let [mut n_plus, mut n_minus] = nonlinear_term(params, &hat, &hat);
    let (a_plus, a_minus) = params.exponents();
    for (n, f, a) in [(&mut n_plus, &hat[0], a_plus), (&mut n_minus, &hat[1], a_minus)] {
        let mut lin = f.clone();
        fractional_laplacian_in_place(&mut lin, a)?;
        for (c, l) in n.coeffs_mut().iter_mut().zip(lin.coeffs()) {
            *c -= params.kappa * l;
        }
    }
    Ok((n_plus.to_real(), n_minus.to_real()))
}

/// Tendency of a periodic scalar under the reduced or the true SQG law.
pub fn rhs_sqg(rho: &RealField2D, params: &ModelParams) -> Result<RealField2D> {
    if !params.variant.is_sqg() {
        return Err(Error::InvalidArgument(format!("rhs_sqg needs an SQG variant, got {}", params.variant)));
    }
    let state = DensityState::new(rho.clone(), RealField2D::zeros(rho.grid()), 0.0)?;
    Ok(rhs(&state, params)?.0)
}

/// `u1 = R1 R2^2 |D|^-1 (theta+ - theta-)`, no dealiasing.
pub fn velocity_from_theta(state: &DensityState) -> RealField2D {
    let diff = state.plus.zip_map(&state.minus, |a, b| a - b);
    crate::spectral::apply_multiplier(&diff, SymbolId::VelTheta)
}

/// `u1 = R1^2 R2^2 (rho+ - rho-)`, no dealiasing.
pub fn velocity_from_rho(rho_plus: &RealField2D, rho_minus: &RealField2D) -> Result<RealField2D> {
    let diff = rho_plus.try_sub(rho_minus)?;
    Ok(crate::spectral::apply_multiplier(&diff, SymbolId::RieszSq))
}

/// Periodic primitive in `x1` plus per-row masses.
#[derive(Clone, Debug)]
pub struct RhoDecomposition {
    pub rho_periodic_plus: RealField2D,
    pub rho_periodic_minus: RealField2D,
    /// `int theta dx1` for each row `x2 = j2 dx2`.
    pub row_mass_plus: Vec<f64>,
    pub row_mass_minus: Vec<f64>,
}

/// Mean-free periodic antiderivative of `theta` in `x1` and its row masses.
pub fn primitive(theta: &RealField2D) -> (RealField2D, Vec<f64>) {
    let grid = theta.grid();
    let dx1 = grid.dx1();
    let masses = (0..grid.n2()).map(|j2| theta.row(j2).iter().sum::<f64>() * dx1).collect::<Vec<_>>();
    let mut hat = theta.to_spectral();
    multiply_in_place(&mut hat, SymbolId::InvD1);
    (hat.to_real(), masses)
}

pub fn primitive_rho(state: &DensityState) -> RhoDecomposition {
    let (rp, mp) = primitive(&state.plus);
    let (rm, mm) = primitive(&state.minus);
    RhoDecomposition { rho_periodic_plus: rp, rho_periodic_minus: rm, row_mass_plus: mp, row_mass_minus: mm }
}

/// Field equal to `row_mass(x2) / L1` on every row.
pub fn row_slope_field(grid: &Grid2D, row_mass: &[f64]) -> RealField2D {
    let l1 = grid.l1();
    let n1 = grid.n1();
    let values = row_mass.iter().flat_map(|m| std::iter::repeat_n(m / l1, n1)).collect();
    RealField2D::from_values_unchecked(grid, values)
}

impl RhoDecomposition {
    /// `d1(rho_periodic) + row_mass / L1` for both signs.
    pub fn reconstruct_theta(&self) -> (RealField2D, RealField2D) {
        let grid = self.rho_periodic_plus.grid();
        let rebuild = |rho: &RealField2D, mass: &[f64]| {
            let mut hat = rho.to_spectral();
            partial1_in_place(&mut hat);
            hat.to_real().zip_map(&row_slope_field(grid, mass), |a, b| a + b)
        };
        (rebuild(&self.rho_periodic_plus, &self.row_mass_plus), rebuild(&self.rho_periodic_minus, &self.row_mass_minus))
    }
}

/// `SqgReduced` state whose `d1 rho` equals `theta`.
pub fn sqg_state_from_theta(theta: &RealField2D, t: f64) -> DensityState {
    let (rho, masses) = primitive(theta);
    let slope = row_slope_field(theta.grid(), &masses);
    DensityState::new_unchecked(rho, slope, t)
}

/// `d1 rho_p + S` of an `SqgReduced` state.
pub fn theta_from_sqg_state(state: &DensityState) -> RealField2D {
    let mut hat = state.plus.to_spectral();
    partial1_in_place(&mut hat);
    hat.to_real().zip_map(&state.minus, |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitKind {
    SeparableGaussian,
    TwoBumps,
    SingleMode,
    FromSnapshot,
}

impl InitKind {
    pub fn name(self) -> &'static str {
        match self {
            InitKind::SeparableGaussian => "SeparableGaussian",
            InitKind::TwoBumps => "TwoBumps",
            InitKind::SingleMode => "SingleMode",
            InitKind::FromSnapshot => "FromSnapshot",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [InitKind::SeparableGaussian, InitKind::TwoBumps, InitKind::SingleMode, InitKind::FromSnapshot]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown init kind {s:?}")))
    }
}

/// Initial-data parameters. Lengths are in box units.
#[derive(Clone, Debug, PartialEq)]
pub struct InitParams {
    pub amplitude: f64,
    pub amplitude_minus: f64,
    pub sigma: f64,
    /// Centre of the plus bump; box middle when absent.
    pub center: Option<[f64; 2]>,
    /// `x1` offset of the minus bump from the plus bump; `L1/4` when absent.
    pub separation: Option<f64>,
    /// Integer mode numbers for `SingleMode`.
    pub mode: (i64, i64),
    pub snapshot: Option<PathBuf>,
}

impl Default for InitParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            amplitude_minus: 0.5,
            sigma: 1.0,
            center: None,
            separation: None,
            mode: (1, 1),
            snapshot: None,
        }
    }
}

/// Signed periodic offset in `[-L/2, L/2)`.
pub fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l + 0.5).floor()
}

/// Smooth compactly supported bump, 1 at the centre, 0 beyond `radius`.
pub fn bump(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

pub fn init_data(grid: &Grid2D, kind: InitKind, p: &InitParams) -> Result<DensityState> {
    let (l1, l2) = (grid.l1(), grid.l2());
    let c = p.center.unwrap_or([0.5 * l1, 0.5 * l2]);
    let sep = p.separation.unwrap_or(0.25 * l1);
    let needs_positive = matches!(kind, InitKind::SeparableGaussian | InitKind::TwoBumps);
    if needs_positive {
        if p.amplitude < 0.0 || p.amplitude_minus < 0.0 {
            return Err(Error::InvalidArgument(format!("{} needs non-negative amplitudes", kind.name())));
        }
        if !(p.sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma = {} must be positive", p.sigma)));
        }
    }
    let state = match kind {
        InitKind::SeparableGaussian => {
            let g = |x: f64, x0: f64, l: f64| {
                let d = wrap(x - x0, l);
                (-d * d / (2.0 * p.sigma * p.sigma)).exp()
            };
            let plus = RealField2D::from_fn(grid, |x, y| p.amplitude * g(x, c[0], l1) * g(y, c[1], l2));
            let minus = RealField2D::from_fn(grid, |x, y| p.amplitude_minus * g(x, c[0] + sep, l1) * g(y, c[1], l2));
            DensityState::new(plus, minus, 0.0)?
        }
        InitKind::TwoBumps => {
            let radius = 2.0 * p.sigma;
            let at = |x: f64, y: f64, cx: f64| {
                let r = wrap(x - cx, l1).hypot(wrap(y - c[1], l2));
                bump(r, radius)
            };
            let plus = RealField2D::from_fn(grid, |x, y| p.amplitude * at(x, y, c[0]));
            let minus = RealField2D::from_fn(grid, |x, y| p.amplitude_minus * at(x, y, c[0] + sep));
            DensityState::new(plus, minus, 0.0)?
        }
        InitKind::SingleMode => {
            let k1 = 2.0 * std::f64::consts::PI * p.mode.0 as f64 / l1;
            let k2 = 2.0 * std::f64::consts::PI * p.mode.1 as f64 / l2;
            let plus = RealField2D::from_fn(grid, |x, y| p.amplitude * (k1 * x + k2 * y).cos());
            let minus = RealField2D::from_fn(grid, |x, y| p.amplitude_minus * (k1 * x + k2 * y).cos());
            DensityState::new(plus, minus, 0.0)?
        }
        InitKind::FromSnapshot => {
            let path = p
                .snapshot
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("FromSnapshot needs a snapshot path".into()))?;
            let snap = Snapshot::load(path)?;
            let (plus, minus) = snap.fields_on(grid)?;
            DensityState::new(plus, minus, snap.header.t)?
        }
    };
    Ok(state)
}

/// Direct evaluation of a real trigonometric polynomial's Fourier product,
/// used by tests as an aliasing-free oracle for small grids.
#[doc(hidden)]
pub fn direct_convolution(a: &SpectralField2D, b: &SpectralField2D) -> SpectralField2D {
    let g = a.grid().clone();
    let (n1, n2) = (g.n1() as i64, g.n2() as i64);
    let n = (n1 * n2) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    let wrapi = |m: i64, n: i64| m.rem_euclid(n) as usize;
    for j2 in 0..g.n2() {
        for j1 in 0..g.n1() {
            let ca = a.coeffs()[g.index(j1, j2)];
            if ca == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i2 in 0..g.n2() {
                for i1 in 0..g.n1() {
                    let cb = b.coeffs()[g.index(i1, i2)];
                    let m1 = g.m1()[j1] + g.m1()[i1];
                    let m2 = g.m2()[j2] + g.m2()[i2];
                    out[g.index(wrapi(m1, n1), wrapi(m2, n2))] += ca * cb / n;
                }
            }
        }
    }
    SpectralField2D::from_coeffs(&g, out).expect("same grid")
}
