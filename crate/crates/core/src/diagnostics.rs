//! Norms and monitored quantities of discrete states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moc::ScaledModulus;
use crate::model::{primitive_rho, velocity, DensityState, ModelParams, RhoDecomposition, Variant};
use crate::spectral::{dyadic_block_spectral, partial1_in_place, partial2_in_place, Grid2D, RealField2D};

/// `sup_{x2} int |f| dx1` as a max of row sums.
pub fn linf_l1_norm(f: &RealField2D) -> f64 {
    let g = f.grid();
    (0..g.n2()).map(|j2| f.row(j2).iter().map(|v| v.abs()).sum::<f64>() * g.dx1()).fold(0.0, f64::max)
}

/// `||(1 + |k|^m) f_hat||` with Parseval weights, so that `m = 0` gives `2 ||f||_2`.
pub fn sobolev_norm(f: &RealField2D, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::InvalidArgument(format!("Sobolev index m = {m} must be >= 0")));
    }
    let g = f.grid();
    let hat = f.to_spectral();
    let mut s = 0.0;
    for j2 in 0..g.n2() {
        for j1 in 0..g.n1() {
            let w = 1.0 + g.kmag(j1, j2).powf(m);
            s += w * w * hat.coeffs()[g.index(j1, j2)].norm_sqr();
        }
    }
    Ok((s * g.cell_area() / g.len() as f64).sqrt())
}

/// Trapezoid rule over `(t, value)` pairs sorted by `t`.
pub fn blowup_integral(history: &[(f64, f64)]) -> f64 {
    history.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Running version of [`blowup_integral`].
#[derive(Clone, Debug, Default)]
pub struct BlowupIntegrator {
    last: Option<(f64, f64)>,
    value: f64,
}

impl BlowupIntegrator {
    pub fn push(&mut self, t: f64, v: f64) -> f64 {
        if let Some((t0, v0)) = self.last {
            self.value += 0.5 * (t - t0) * (v0 + v);
        }
        self.last = Some((t, v));
        self.value
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The `theta` pair a state represents.
pub fn theta_fields(state: &DensityState, variant: Variant) -> (RealField2D, RealField2D) {
    let d1 = |f: &RealField2D| {
        let mut h = f.to_spectral();
        partial1_in_place(&mut h);
        h.to_real()
    };
    match variant {
        Variant::ThetaForm | Variant::GeneralizedTheta => (state.plus().clone(), state.minus().clone()),
        Variant::RhoForm => (d1(state.plus()), d1(state.minus())),
        Variant::SqgReduced => {
            let t = d1(state.plus()).try_add(state.minus()).expect("same grid");
            (t, RealField2D::zeros(state.grid()))
        }
        Variant::SqgTrue => (d1(state.plus()), RealField2D::zeros(state.grid())),
    }
}

/// `rho = rho_periodic + row_mass(x2) x1 / L1` for each variant's state.
pub fn rho_decomposition(state: &DensityState, variant: Variant) -> RhoDecomposition {
    let g = state.grid();
    let zero = vec![0.0; g.n2()];
    match variant {
        Variant::ThetaForm | Variant::GeneralizedTheta => primitive_rho(state),
        Variant::RhoForm => RhoDecomposition {
            rho_periodic_plus: state.plus().clone(),
            rho_periodic_minus: state.minus().clone(),
            row_mass_plus: zero.clone(),
            row_mass_minus: zero,
        },
        Variant::SqgReduced => {
            let masses = (0..g.n2()).map(|j2| state.minus().get(0, j2) * g.l1()).collect();
            RhoDecomposition {
                rho_periodic_plus: state.plus().clone(),
                rho_periodic_minus: RealField2D::zeros(g),
                row_mass_plus: masses,
                row_mass_minus: zero,
            }
        }
        Variant::SqgTrue => RhoDecomposition {
            rho_periodic_plus: state.plus().clone(),
            rho_periodic_minus: RealField2D::zeros(g),
            row_mass_plus: zero.clone(),
            row_mass_minus: zero,
        },
    }
}

fn lipschitz_one(rho: &RealField2D, mass: &[f64]) -> f64 {
    let g = rho.grid();
    let hat = rho.to_spectral();
    let mut a = hat.clone();
    partial1_in_place(&mut a);
    let mut b = hat;
    partial2_in_place(&mut b);
    let (a, b) = (a.to_real(), b.to_real());
    let mut out: f64 = 0.0;
    for (j2, m) in mass.iter().enumerate() {
        let slope = m / g.l1();
        for j1 in 0..g.n1() {
            out = out.max((a.get(j1, j2) + slope).hypot(b.get(j1, j2)));
        }
    }
    out
}

/// `max |grad rho|` over the grid and both signs.
pub fn lipschitz_norm(rho: &RhoDecomposition) -> f64 {
    lipschitz_one(&rho.rho_periodic_plus, &rho.row_mass_plus)
        .max(lipschitz_one(&rho.rho_periodic_minus, &rho.row_mass_minus))
}

/// Integer grid displacement `(h1, h2)` in cells.
pub type Displacement = (i64, i64);

/// Axis shifts `1..=n/2` on both axes plus `n_random` diagonal shifts.
pub fn default_displacements(grid: &Grid2D, n_random: usize, seed: u64) -> Vec<Displacement> {
    let (h1, h2) = ((grid.n1() / 2) as i64, (grid.n2() / 2) as i64);
    let mut out: Vec<Displacement> = (1..=h1).map(|s| (s, 0)).chain((1..=h2).map(|s| (0, s))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let a = rng.gen_range(1..=h1) * if rng.gen::<bool>() { 1 } else { -1 };
        let b = rng.gen_range(1..=h2);
        out.push((a, b));
    }
    out
}

fn compliance_one(rho: &RealField2D, mass: &[f64], m: &ScaledModulus, shifts: &[Displacement]) -> f64 {
    let g = rho.grid();
    let (n1, n2) = (g.n1() as i64, g.n2() as i64);
    let (dx1, dx2, l1) = (g.dx1(), g.dx2(), g.l1());
    let mut out: f64 = 0.0;
    for &(h1, h2) in shifts {
        let dist = (h1 as f64 * dx1).hypot(h2 as f64 * dx2);
        let w = m.eval(dist);
        if !(w > 0.0) {
            continue;
        }
        let mut worst: f64 = 0.0;
        for j2 in 0..n2 {
            let k2 = (j2 + h2).rem_euclid(n2);
            let s0 = mass[j2 as usize] / l1;
            let s1 = mass[k2 as usize] / l1;
            for j1 in 0..n1 {
                let x1 = j1 as f64 * dx1;
                let y1 = (j1 + h1) as f64 * dx1;
                let k1 = (j1 + h1).rem_euclid(n1);
                let a = rho.get(j1 as usize, j2 as usize) + s0 * x1;
                let b = rho.get(k1 as usize, k2 as usize) + s1 * y1;
                worst = worst.max((b - a).abs());
            }
        }
        out = out.max(worst / w);
    }
    out
}

/// `max |rho(x+h) - rho(x)| / omega_lambda(|h|)` over base points, shifts and
/// both signs. Values below 1 mean the modulus is obeyed on the sample.
pub fn moc_compliance(rho: &RhoDecomposition, m: &ScaledModulus, shifts: &[Displacement]) -> Result<f64> {
    if shifts.is_empty() || shifts.iter().any(|&(a, b)| a == 0 && b == 0) {
        return Err(Error::InvalidArgument("displacements must be nonempty and nonzero".into()));
    }
    Ok(compliance_one(&rho.rho_periodic_plus, &rho.row_mass_plus, m, shifts).max(compliance_one(
        &rho.rho_periodic_minus,
        &rho.row_mass_minus,
        m,
        shifts,
    )))
}

/// `p` in {1, 2, inf} grid norm.
fn grid_norm(f: &RealField2D, p: f64) -> Result<f64> {
    if p == 1.0 || p == 2.0 || p.is_infinite() {
        Ok(f.lp_norm(p))
    } else {
        Err(Error::InvalidArgument(format!("Bernstein norms need p in {{1, 2, inf}}, got {p}")))
    }
}

/// `|| |D|^k f ||_q / (2^(j (k + 2 (1/p - 1/q))) ||f||_p)` after projecting onto block `j`.
pub fn bernstein_ratio(f: &RealField2D, j: i32, k: f64, p: f64, q: f64) -> Result<f64> {
    let block = dyadic_block_spectral(&f.to_spectral(), j)?;
    let fb = block.to_real();
    let denom = grid_norm(&fb, p)?;
    if denom == 0.0 {
        let _ = grid_norm(&fb, q)?;
        return Ok(0.0);
    }
    let g = f.grid();
    let mut d = block;
    for j2 in 0..g.n2() {
        for j1 in 0..g.n1() {
            let km = g.kmag(j1, j2);
            d.coeffs_mut()[g.index(j1, j2)] *= if km == 0.0 { 0.0 } else { km.powf(k) };
        }
    }
    let num = grid_norm(&d.to_real(), q)?;
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let scale = 2f64.powf(j as f64 * (k + 2.0 * (inv(p) - inv(q))));
    Ok(num / (scale * denom))
}

/// One output row. Field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub linf_plus: f64,
    pub linf_minus: f64,
    pub l2_plus: f64,
    pub l2_minus: f64,
    pub lp_plus: f64,
    pub lp_minus: f64,
    pub hm_plus: f64,
    pub hm_minus: f64,
    pub linfl1_plus: f64,
    pub linfl1_minus: f64,
    pub min_plus: f64,
    pub min_minus: f64,
    pub lip_rho: f64,
    pub u_linf: f64,
    pub blowup_integral: f64,
    /// NaN when no modulus is tracked.
    pub moc_compliance: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,linf_plus,linf_minus,l2_plus,l2_minus,lp_plus,lp_minus,hm_plus,hm_minus,linfl1_plus,linfl1_minus,min_plus,min_minus,lip_rho,u_linf,blowup_integral,moc_compliance";

    pub fn values(&self) -> [f64; 17] {
        [
            self.t,
            self.linf_plus,
            self.linf_minus,
            self.l2_plus,
            self.l2_minus,
            self.lp_plus,
            self.lp_minus,
            self.hm_plus,
            self.hm_minus,
            self.linfl1_plus,
            self.linfl1_minus,
            self.min_plus,
            self.min_minus,
            self.lip_rho,
            self.u_linf,
            self.blowup_integral,
            self.moc_compliance,
        ]
    }

    pub fn csv_row(&self) -> String {
        self.values().iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",")
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad diagnostics row: {e}")))?;
        if v.len() != 17 {
            return Err(Error::InvalidArgument(format!("diagnostics row has {} columns, expected 17", v.len())));
        }
        Ok(Self {
            t: v[0],
            linf_plus: v[1],
            linf_minus: v[2],
            l2_plus: v[3],
            l2_minus: v[4],
            lp_plus: v[5],
            lp_minus: v[6],
            hm_plus: v[7],
            hm_minus: v[8],
            linfl1_plus: v[9],
            linfl1_minus: v[10],
            min_plus: v[11],
            min_minus: v[12],
            lip_rho: v[13],
            u_linf: v[14],
            blowup_integral: v[15],
            moc_compliance: v[16],
        })
    }
}

/// Settings and running state for per-output diagnostics.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub p: f64,
    pub m: f64,
    pub tracked: Option<(ScaledModulus, Vec<Displacement>)>,
    integrator: BlowupIntegrator,
}

impl Diagnostics {
    pub fn new(p: f64, m: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
        }
        if !(m >= 0.0) {
            return Err(Error::InvalidArgument(format!("m = {m} must be >= 0")));
        }
        Ok(Self { p, m, tracked: None, integrator: BlowupIntegrator::default() })
    }

    pub fn with_modulus(mut self, m: ScaledModulus, shifts: Vec<Displacement>) -> Self {
        self.tracked = Some((m, shifts));
        self
    }

    /// Computes a record and advances the running blow-up integral.
    pub fn record(&mut self, state: &DensityState, params: &ModelParams) -> Result<DiagnosticsRecord> {
        let (tp, tm) = theta_fields(state, params.variant);
        let rho = rho_decomposition(state, params.variant);
        let linf_plus = tp.max_abs();
        let linf_minus = tm.max_abs();
        let blow = self.integrator.push(state.t(), linf_plus.max(linf_minus));
        let moc = match &self.tracked {
            Some((m, shifts)) => moc_compliance(&rho, m, shifts)?,
            None => f64::NAN,
        };
        Ok(DiagnosticsRecord {
            t: state.t(),
            linf_plus,
            linf_minus,
            l2_plus: tp.l2_norm(),
            l2_minus: tm.l2_norm(),
            lp_plus: tp.lp_norm(self.p),
            lp_minus: tm.lp_norm(self.p),
            hm_plus: sobolev_norm(&tp, self.m)?,
            hm_minus: sobolev_norm(&tm, self.m)?,
            linfl1_plus: linf_l1_norm(&tp),
            linfl1_minus: linf_l1_norm(&tm),
            min_plus: tp.min(),
            min_minus: tm.min(),
            lip_rho: lipschitz_norm(&rho),
            u_linf: velocity(state, params).max_abs(),
            blowup_integral: blow,
            moc_compliance: moc,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moc::Modulus;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::square(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn linf_l1_examples() {
        let g = grid(32);
        let f = RealField2D::from_fn(&g, |x, y| (2.0 + y.cos()) * (1.0 + x.sin()));
        // row sum of 1 + sin x is exactly 2 pi on the grid
        assert!((linf_l1_norm(&f) - 3.0 * 2.0 * PI).abs() < 1e-12);
        assert_eq!(linf_l1_norm(&RealField2D::zeros(&g)), 0.0);
        let w = 1.0;
        let b = RealField2D::from_fn(&g, |x, _| if (x - PI).abs() < 0.5 * w { 1.0 } else { 0.0 });
        assert!((linf_l1_norm(&b) - w).abs() <= g.dx1());
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(32);
        let f = RealField2D::from_fn(&g, |x, _| x.sin());
        let l2 = f.l2_norm();
        assert!((l2 - (g.area() / 2.0).sqrt()).abs() < 1e-12);
        assert!((sobolev_norm(&f, 2.0).unwrap() - 2.0 * l2).abs() < 1e-12);
        assert!((sobolev_norm(&f, 0.0).unwrap() - 2.0 * l2).abs() < 1e-12);
        let h = RealField2D::from_fn(&g, |x, y| (3.0 * x).sin() + (2.0 * y).cos());
        let mut prev = 0.0;
        for m in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let v = sobolev_norm(&h, m).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn blowup_examples() {
        assert_eq!(blowup_integral(&[]), 0.0);
        assert!((blowup_integral(&[(0.0, 3.0), (0.7, 3.0), (2.0, 3.0)]) - 6.0).abs() < 1e-14);
        assert!((blowup_integral(&[(0.0, 0.0), (0.25, 0.25), (1.0, 1.0)]) - 0.5).abs() < 1e-15);
        let mut r = BlowupIntegrator::default();
        let mut last = 0.0;
        for i in 0..10 {
            let v = r.push(i as f64 * 0.1, 1.0 + (i as f64).sin());
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn lipschitz_examples() {
        let g = grid(32);
        let sinx = RealField2D::from_fn(&g, |x, _| x.sin());
        let z = RealField2D::zeros(&g);
        let d = RhoDecomposition {
            rho_periodic_plus: sinx,
            rho_periodic_minus: z.clone(),
            row_mass_plus: vec![0.0; 32],
            row_mass_minus: vec![0.0; 32],
        };
        assert!((lipschitz_norm(&d) - 1.0).abs() < 1e-12);
        let d = RhoDecomposition {
            rho_periodic_plus: z.clone(),
            rho_periodic_minus: z,
            row_mass_plus: vec![3.0; 32],
            row_mass_minus: vec![0.0; 32],
        };
        assert!((lipschitz_norm(&d) - 3.0 / g.l1()).abs() < 1e-14);
    }

    fn sin_rho(g: &Grid2D, amp: f64) -> RhoDecomposition {
        RhoDecomposition {
            rho_periodic_plus: RealField2D::from_fn(g, |x, _| amp * x.sin()),
            rho_periodic_minus: RealField2D::zeros(g),
            row_mass_plus: vec![0.0; g.n2()],
            row_mass_minus: vec![0.0; g.n2()],
        }
    }

    #[test]
    fn compliance_examples() {
        let g = grid(128);
        let m = ScaledModulus::new(Modulus::linear(), 1.0, 1.5).unwrap();
        let shifts = default_displacements(&g, 64, 7);
        assert!(shifts.iter().any(|&(a, b)| ((a as f64).hypot(b as f64) * g.dx1()) <= 0.1));
        let c = moc_compliance(&sin_rho(&g, 1.0), &m, &shifts).unwrap();
        assert!((0.95..=1.0).contains(&c), "{c}");
        let c2 = moc_compliance(&sin_rho(&g, 2.0), &m, &shifts).unwrap();
        assert!((c2 - 2.0 * c).abs() < 1e-14);
        assert_eq!(moc_compliance(&sin_rho(&g, 0.0), &m, &shifts).unwrap(), 0.0);
        assert!(moc_compliance(&sin_rho(&g, 1.0), &m, &[]).is_err());
    }

    #[test]
    fn compliance_sees_the_ramp() {
        // rho = x1 exactly: theta = 1 has row mass L1 and no periodic part
        let g = grid(16);
        let d = RhoDecomposition {
            rho_periodic_plus: RealField2D::zeros(&g),
            rho_periodic_minus: RealField2D::zeros(&g),
            row_mass_plus: vec![g.l1(); 16],
            row_mass_minus: vec![0.0; 16],
        };
        let m = ScaledModulus::new(Modulus::linear(), 1.0, 1.5).unwrap();
        let c = moc_compliance(&d, &m, &[(3, 0), (-5, 0), (2, 2)]).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bernstein_examples() {
        let g = grid(64);
        let f = RealField2D::from_fn(&g, |x, y| (3.0 * x + 4.0 * y).cos());
        // |k| = 5 lies in block 2
        let r = bernstein_ratio(&f, 2, 1.0, 2.0, 2.0).unwrap();
        assert!((r - 5.0 / 4.0).abs() < 1e-12);
        assert_eq!(bernstein_ratio(&RealField2D::zeros(&g), 2, 1.0, 2.0, 2.0).unwrap(), 0.0);
        assert!(bernstein_ratio(&f, 2, 1.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn theta_fields_for_rho_form() {
        let g = grid(32);
        let s = DensityState::new(RealField2D::from_fn(&g, |x, _| x.sin()), RealField2D::zeros(&g), 0.0).unwrap();
        let (tp, _) = theta_fields(&s, Variant::RhoForm);
        assert!(tp.max_diff(&RealField2D::from_fn(&g, |x, _| x.cos())) < 1e-12);
    }
}
