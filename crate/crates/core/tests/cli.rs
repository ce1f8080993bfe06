use std::process::Command;

use gbsim::diagnostics::DiagnosticsRecord;
use gbsim::runner::read_diagnostics;
use gbsim::snapshot::Snapshot;

fn gbsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gbsim"))
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small smoke run\ngrid.n1 = 32\ngrid.n2 = 32\ngrid.length = 6.283185307179586\n\
         init.kind = TwoBumps\ninit.sigma = 0.5\ntime.t_end = 0.2\noutput.every = 2\nmoc.track = true\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = gbsim().arg("simulate").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());

    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), DiagnosticsRecord::CSV_HEADER);
    let (records, aborted) = read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    assert!(!aborted);
    assert!(records.len() >= 2);
    assert_eq!(records[0].t, 0.0);
    assert!((records.last().unwrap().t - 0.2).abs() < 1e-12);
    assert!(records.iter().all(|r| r.moc_compliance.is_finite()));

    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("[config]"));
    let snaps: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".gbds"))
        .collect();
    assert!(!snaps.is_empty());
    let snap = Snapshot::load(&snaps[0].path()).unwrap();
    assert_eq!((snap.header.n1, snap.header.n2), (32, 32));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "grid.n1 = 32\ngrid.n2 = 32\ntime.t_end = 0.3\ntime.dt = 0.02\noutput.every = 1\n").unwrap();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(gbsim().arg("simulate").arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
        csvs.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "grid.n1 = 32\nmodel.alpha = 2.5\n").unwrap();
    let out = gbsim().arg("simulate").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn certify_alpha_two_passes_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("cert.csv");
    let st = gbsim().args(["certify", "--alpha", "2", "--delta", "1e-3", "--out"]).arg(&report).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "xi,omega,omega_prime,Omega,Psi,margin,err_bound");
    assert!(lines.count() >= 256);
}

#[test]
fn certify_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // a large scale does not satisfy the inequality for alpha = 1.25
    let st = gbsim()
        .args(["certify", "--alpha", "1.25", "--delta", "0.1", "--out"])
        .arg(dir.path().join("c.csv"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn kernel_alpha_one_matches_poisson() {
    let out = gbsim().args(["kernel", "--alpha", "1", "--points", "41"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "radius,value,closed_form,abs_error");
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() <= 1e-4 * v[2]);
        n += 1;
    }
    assert_eq!(n, 41);
}

#[test]
fn invalid_flags_are_rejected() {
    assert_eq!(gbsim().args(["kernel", "--alpha", "3"]).status().unwrap().code(), Some(2));
    assert!(!gbsim().args(["certify"]).status().unwrap().success());
}
