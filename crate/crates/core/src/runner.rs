//! The simulation loop and its on-disk outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::diagnostics::{
    default_displacements, linf_l1_norm, lipschitz_norm, rho_decomposition, theta_fields, Diagnostics,
    DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::moc::{lambda_select, Modulus, ScaledModulus};
use crate::model::{init_data, sqg_state_from_theta, DensityState, InitKind, Variant};
use crate::snapshot::{Snapshot, VERSION};
use crate::spectral::RealField2D;
use crate::stepper::Stepper;

/// Seed of the random diagonal displacements used for compliance tracking.
pub const DISPLACEMENT_SEED: u64 = 0x0067_6273_696d;

/// Initial state in the variant's slot convention.
///
/// The generated profiles are densities for the theta forms. `RhoForm` and
/// `SqgTrue` take the profile itself as the (periodic) advected scalar, and
/// `SqgReduced` takes the primitive of the plus profile. Snapshots are
/// loaded as-is.
pub fn initial_state(cfg: &RunConfig) -> Result<DensityState> {
    let grid = cfg.grid()?;
    let s = init_data(&grid, cfg.init_kind, &cfg.init)?;
    if cfg.init_kind == InitKind::FromSnapshot {
        return Ok(s);
    }
    Ok(match cfg.params.variant {
        Variant::ThetaForm | Variant::GeneralizedTheta | Variant::RhoForm => s,
        Variant::SqgReduced => sqg_state_from_theta(s.plus(), s.t()),
        Variant::SqgTrue => DensityState::new(s.plus().clone(), RealField2D::zeros(&grid), s.t())?,
    })
}

/// Scaled modulus tracked by a run, built from its initial data.
pub fn tracked_modulus(cfg: &RunConfig, state: &DensityState) -> Result<ScaledModulus> {
    let (a, b) = cfg.params.exponents();
    let alpha = a.min(b);
    let base = if alpha == 1.0 {
        Modulus::moc1(cfg.moc_delta, cfg.moc_gamma.unwrap_or(cfg.moc_delta / 10.0))?
    } else {
        Modulus::moc_alpha(cfg.moc_delta)?
    };
    let (tp, tm) = theta_fields(state, cfg.params.variant);
    let n = linf_l1_norm(&tp).max(linf_l1_norm(&tm));
    let g = lipschitz_norm(&rho_decomposition(state, cfg.params.variant));
    if !(n > 0.0 && g > 0.0) {
        return Err(Error::InvalidArgument("MOC tracking needs nonzero initial data".into()));
    }
    let choice = lambda_select(n, g, alpha, &base)?;
    ScaledModulus::new(base, choice.lambda, alpha)
}

/// Diagnostics recorder for `cfg`, tracking a modulus chosen from `state`
/// when `moc.track` is set.
pub fn diagnostics_for(cfg: &RunConfig, state: &DensityState) -> Result<(Diagnostics, Option<ScaledModulus>)> {
    let diag = Diagnostics::new(cfg.diag_p, cfg.diag_m)?;
    if !cfg.moc_track {
        return Ok((diag, None));
    }
    let m = tracked_modulus(cfg, state)?;
    Ok((diag.with_modulus(m, default_displacements(state.grid(), 64, DISPLACEMENT_SEED)), Some(m)))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: DensityState,
    pub steps: usize,
    pub aborted: bool,
    pub tracked: Option<ScaledModulus>,
    pub snapshots: Vec<PathBuf>,
}

struct Sink {
    dir: PathBuf,
    csv: BufWriter<File>,
}

impl Sink {
    fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(csv, "{}", DiagnosticsRecord::CSV_HEADER)?;
        Ok(Self { dir: dir.to_path_buf(), csv })
    }

    fn snapshot(&self, state: &DensityState, step: usize) -> Result<PathBuf> {
        let path = self.dir.join(format!("snap_{step:06}.gbds"));
        Snapshot::from_fields(state.plus(), state.minus(), state.t())?.save(&path)?;
        Ok(path)
    }
}

/// Runs `cfg`, writing outputs to `cfg.output_dir` when `write` is set.
///
/// A non-finite state stops the run: the CSV gets a final `# aborted=nan`
/// line and the outcome is returned with `aborted` set.
pub fn run(cfg: &RunConfig, write: bool) -> Result<RunOutcome> {
    let started = Instant::now();
    let mut state = initial_state(cfg)?;
    let (mut diag, tracked) = diagnostics_for(cfg, &state)?;
    let mut sink = if write { Some(Sink::open(&cfg.output_dir)?) } else { None };
    let mut stepper = Stepper::new(cfg.params, cfg.stepper)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let t_end = cfg.stepper.t_end;

    let mut emit = |rec: DiagnosticsRecord, sink: &mut Option<Sink>| -> Result<()> {
        if let Some(s) = sink {
            writeln!(s.csv, "{}", rec.csv_row())?;
        }
        records.push(rec);
        Ok(())
    };
    emit(diag.record(&state, &cfg.params)?, &mut sink)?;

    let mut steps = 0usize;
    let mut aborted = false;
    while state.t() < t_end {
        let remaining = t_end - state.t();
        let mut h = stepper.next_dt(&state);
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
        }
        match stepper.step_by(&state, h) {
            Ok(mut next) => {
                if (t_end - next.t()).abs() <= 1e-14 * t_end.abs() {
                    next.set_t(t_end);
                }
                state = next;
            }
            Err(Error::NonFinite(msg)) => {
                if let Some(s) = &mut sink {
                    writeln!(s.csv, "# aborted=nan t={:e} {msg}", state.t())?;
                }
                aborted = true;
                break;
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        let done = state.t() >= t_end;
        if steps.is_multiple_of(cfg.output_every) || done {
            emit(diag.record(&state, &cfg.params)?, &mut sink)?;
        }
        if let Some(s) = &sink {
            if cfg.snapshot_every > 0 && steps.is_multiple_of(cfg.snapshot_every) && !done {
                snapshots.push(s.snapshot(&state, steps)?);
            }
        }
    }

    if let Some(mut s) = sink {
        if !aborted {
            snapshots.push(s.snapshot(&state, steps)?);
        }
        s.csv.flush()?;
        let mut m = String::new();
        m.push_str(&format!("gbsim {}\n", env!("CARGO_PKG_VERSION")));
        m.push_str(&format!("snapshot_version = {VERSION}\n"));
        m.push_str(&format!("steps = {steps}\n"));
        m.push_str(&format!("t_final = {:?}\n", state.t()));
        m.push_str(&format!("aborted = {}\n", if aborted { "nan" } else { "no" }));
        if let Some(t) = &tracked {
            m.push_str(&format!("tracked_modulus = {} lambda = {:?} alpha = {}\n", t.base, t.lambda, t.alpha));
        }
        m.push_str(&format!("wall_seconds = {:.3}\n", started.elapsed().as_secs_f64()));
        m.push_str("[config]\n");
        m.push_str(&cfg.to_text());
        std::fs::write(s.dir.join("manifest.txt"), m)?;
    }
    Ok(RunOutcome { records, final_state: state, steps, aborted, tracked, snapshots })
}

/// Reads the data rows of a diagnostics CSV, skipping comment lines.
pub fn read_diagnostics(path: &Path) -> Result<(Vec<DiagnosticsRecord>, bool)> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut aborted = false;
    for line in text.lines().skip(1) {
        if line.starts_with('#') {
            aborted |= line.contains("aborted=nan");
            continue;
        }
        if !line.trim().is_empty() {
            out.push(DiagnosticsRecord::parse_csv_row(line)?);
        }
    }
    Ok((out, aborted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> RunConfig {
        RunConfig::parse(&format!(
            "grid.n1 = 32\ngrid.n2 = 32\ngrid.length = 6.283185307179586\ntime.t_end = 0.1\ntime.dt = 0.01\noutput.every = 2\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn zero_data_gives_zero_diagnostics() {
        let cfg = small("init.amplitude = 0\ninit.amplitude_minus = 0\n");
        let out = run(&cfg, false).unwrap();
        assert!(!out.aborted);
        assert_eq!(out.records.len(), 6);
        for r in &out.records {
            let v = r.values();
            assert!(v[1..16].iter().all(|x| *x == 0.0), "{v:?}");
        }
    }

    #[test]
    fn writes_outputs_and_restarts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small("output.snapshot_every = 4\n");
        cfg.output_dir = dir.path().join("a");
        let full = run(&cfg, true).unwrap();
        let (rows, aborted) = read_diagnostics(&cfg.output_dir.join("diagnostics.csv")).unwrap();
        assert!(!aborted);
        let bits = |r: &[DiagnosticsRecord]| r.iter().flat_map(|x| x.values().map(f64::to_bits)).collect::<Vec<_>>();
        assert_eq!(bits(&rows), bits(&full.records));
        assert!(cfg.output_dir.join("manifest.txt").exists());
        let snap = cfg.output_dir.join("snap_000004.gbds");
        assert!(snap.exists());

        let mut again = cfg.clone();
        again.output_dir = dir.path().join("b");
        again.init_kind = InitKind::FromSnapshot;
        again.init.snapshot = Some(snap);
        let rest = run(&again, false).unwrap();
        // records at steps 4, 6, 8, 10 of the full run
        for (a, b) in rest.records.iter().zip(&full.records[2..]) {
            let (va, vb) = (a.values(), b.values());
            for i in 0..15 {
                assert!((va[i] - vb[i]).abs() <= 1e-12 * vb[i].abs().max(1.0), "column {i}");
            }
        }
        assert_eq!(rest.records.len(), 4);
    }

    #[test]
    fn nan_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small("init.amplitude = 1e200\nmodel.kappa = 0\n");
        cfg.stepper.dt = 1.0;
        cfg.stepper.t_end = 50.0;
        cfg.output_dir = dir.path().to_path_buf();
        let out = run(&cfg, true).unwrap();
        assert!(out.aborted);
        let (_, aborted) = read_diagnostics(&dir.path().join("diagnostics.csv")).unwrap();
        assert!(aborted);
    }
}
