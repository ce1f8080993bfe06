//! Acceptance suite. Each criterion is its own test so the harness prints
//! one ok/FAILED line per criterion; details go to stdout (`--nocapture`).

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use gbsim::checks::{self, CheckResult};
use gbsim::config::RunConfig;
use gbsim::moc::{certify_pair, lambda_select, search_parameters, CertifyOptions, MocConstants, Modulus};
use gbsim::model::{InitKind, ModelParams, Variant};
use gbsim::runner::{self, RunOutcome};
use gbsim::stepper::StepperConfig;

fn report(label: &str, results: &[CheckResult], start: Instant) {
    for r in results {
        println!("[{label}] {}", r.line());
    }
    println!("[{label}] {:.2} s", start.elapsed().as_secs_f64());
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    assert!(failed.is_empty(), "{label}: {failed:#?}");
}

#[test]
fn criterion_01_multiplier_exactness() {
    let t = Instant::now();
    let r = checks::multiplier_exactness(64, 20, 11).unwrap();
    report("1", &[r], t);
    assert!(t.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn criterion_02_operator_cross_oracle() {
    let t = Instant::now();
    let r = checks::operator_cross_oracle(512, 16.0 * PI, 0.5, &[0.5, 1.0, 1.5]).unwrap();
    report("2", &[r], t);
}

#[test]
fn criterion_03_kernel_closed_forms() {
    let t = Instant::now();
    report("3", &checks::kernel_checks().unwrap(), t);
}

fn two_bump_config() -> RunConfig {
    RunConfig {
        params: ModelParams::new(Variant::ThetaForm, 1.0, 1.5),
        init_kind: InitKind::TwoBumps,
        stepper: StepperConfig { t_end: 1.0, ..StepperConfig::default() },
        output_every: 1,
        moc_track: true,
        moc_delta: 0.1,
        ..RunConfig::default()
    }
}

fn two_bump_run() -> &'static RunOutcome {
    static RUN: OnceLock<RunOutcome> = OnceLock::new();
    RUN.get_or_init(|| {
        let t = Instant::now();
        let out = runner::run(&two_bump_config(), false).unwrap();
        println!("[4-6] {} steps, {} records, {:.2} s", out.steps, out.records.len(), t.elapsed().as_secs_f64());
        out
    })
}

#[test]
fn criterion_04_positivity() {
    let out = two_bump_run();
    assert!(!out.aborted);
    let r0 = &out.records[0];
    let scale = r0.linf_plus.max(r0.linf_minus);
    let worst = out.records.iter().map(|r| r.min_plus.min(r.min_minus)).fold(f64::INFINITY, f64::min);
    let ok = worst >= -1e-8 * scale;
    println!("[4] {} min over records {worst:.3e}, bound {:.3e}", if ok { "PASS" } else { "FAIL" }, -1e-8 * scale);
    assert!(ok);
    assert!((out.final_state.t() - 1.0).abs() < 1e-12);
}

#[test]
fn criterion_05_mixed_norm_maximum_principle() {
    let out = two_bump_run();
    let r0 = &out.records[0];
    let ratio = out
        .records
        .iter()
        .map(|r| (r.linfl1_plus / r0.linfl1_plus).max(r.linfl1_minus / r0.linfl1_minus))
        .fold(0.0, f64::max);
    let ok = ratio <= 1.0 + 1e-6;
    println!("[5] {} max_t linfl1(t) / linfl1(0) = {ratio:.12}", if ok { "PASS" } else { "FAIL" });
    assert!(ok);
}

#[test]
fn criterion_06_lipschitz_bound() {
    let out = two_bump_run();
    let tracked = out.tracked.expect("modulus tracked");
    // same lambda as an independent lambda_select call
    let r0 = &out.records[0];
    let n = r0.linfl1_plus.max(r0.linfl1_minus);
    let m = Modulus::moc_alpha(0.1).unwrap();
    let choice = lambda_select(n, r0.lip_rho, 1.5, &m).unwrap();
    assert!((choice.lambda - tracked.lambda).abs() <= 1e-12 * choice.lambda);
    let bound = choice.lambda.powf(1.5);
    let max_lip = out.records.iter().map(|r| r.lip_rho).fold(0.0, f64::max);
    let ok = max_lip <= bound && max_lip <= 3.0 * r0.lip_rho;
    println!(
        "[6] {} max lip {max_lip:.6e}, lambda^alpha {bound:.6e}, 3 lip(0) {:.6e}",
        if ok { "PASS" } else { "FAIL" },
        3.0 * r0.lip_rho
    );
    assert!(ok);
}

#[test]
fn criterion_07_moc_certificate() {
    let t = Instant::now();
    let opts = CertifyOptions::default();
    let mut all = true;
    for alpha in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let c = MocConstants::defaults(alpha).unwrap();
        let found = search_parameters(alpha, 1.0, 1.0, &c, &opts).unwrap();
        let hit = found.iter().find(|c| c.report.pass && c.report.xi_samples.len() >= 256);
        match hit {
            Some(h) => println!("[7] PASS alpha={alpha} {} worst={:.3e}", h.modulus, h.report.worst()),
            None => {
                println!("[7] FAIL alpha={alpha}: no candidate passed");
                all = false;
            }
        }
    }
    let m = Modulus::moc_alpha(1e-2).unwrap();
    let lam = lambda_select(1.0, 1.0, 1.5, &m).unwrap().lambda.max(lambda_select(1.0, 1.0, 2.0, &m).unwrap().lambda);
    let consts = [MocConstants::defaults(1.5).unwrap(), MocConstants::defaults(2.0).unwrap()];
    let pair = certify_pair(1.5, 2.0, &m, lam, 1.0, consts, &opts).unwrap();
    println!(
        "[7] {} pair (1.5, 2) {m}: worst {:.3e} / {:.3e}",
        if pair.pass() { "PASS" } else { "FAIL" },
        pair.reports.0.worst(),
        pair.reports.1.worst()
    );
    println!("[7] {:.2} s", t.elapsed().as_secs_f64());
    assert!(all && pair.pass());
}

#[test]
fn criterion_08_time_orders() {
    let t = Instant::now();
    report("8", &checks::richardson_checks().unwrap(), t);
}

#[test]
fn criterion_09_spectral_accuracy() {
    let t = Instant::now();
    report("9", &[checks::spatial_convergence().unwrap()], t);
}

#[test]
fn criterion_10_picard_contraction() {
    let t = Instant::now();
    report("10", &checks::picard_checks().unwrap(), t);
}

#[test]
fn criterion_11_reduction_consistency() {
    let t = Instant::now();
    report("11", &[checks::reduction_consistency(64, 0.5, 100).unwrap()], t);
}

#[test]
fn criterion_12_bernstein_band() {
    let t = Instant::now();
    report("12", &checks::bernstein_band(100, 3).unwrap(), t);
}
