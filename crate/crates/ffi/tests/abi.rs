use std::ffi::{CStr, CString};
use std::ptr;

use gbsim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gb_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_and_columns() {
    let v = unsafe { CStr::from_ptr(gb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let cols = unsafe { CStr::from_ptr(gb_diagnostics_columns()) }.to_str().unwrap();
    assert_eq!(cols.split(',').count(), GB_DIAGNOSTICS_LEN);
    assert!(cols.starts_with("t,linf_plus"));
}

#[test]
fn simulation_lifecycle() {
    let cfg = CString::new("grid.n1 = 32\ngrid.n2 = 32\ntime.dt = 0.01\n").unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(gb_simulation_new(cfg.as_ptr(), &mut sim), GbStatus::Ok);
        let (mut n1, mut n2) = (0, 0);
        assert_eq!(gb_simulation_grid(sim, &mut n1, &mut n2), GbStatus::Ok);
        assert_eq!((n1, n2), (32, 32));

        let mut d0 = [0.0; GB_DIAGNOSTICS_LEN];
        assert_eq!(gb_simulation_diagnostics(sim, d0.as_mut_ptr(), d0.len()), GbStatus::Ok);
        assert_eq!(gb_simulation_step(sim, 5), GbStatus::Ok);
        let mut t = 0.0;
        assert_eq!(gb_simulation_time(sim, &mut t), GbStatus::Ok);
        assert!((t - 0.05).abs() < 1e-14);
        assert_eq!(gb_simulation_advance_to(sim, 0.2), GbStatus::Ok);
        assert_eq!(gb_simulation_time(sim, &mut t), GbStatus::Ok);
        assert!((t - 0.2).abs() < 1e-14);

        let mut d = [0.0; GB_DIAGNOSTICS_LEN];
        assert_eq!(gb_simulation_diagnostics(sim, d.as_mut_ptr(), d.len()), GbStatus::Ok);
        assert_eq!(d[0], t);
        // dissipation does not raise the mixed norm
        assert!(d[9] <= d0[9] * (1.0 + 1e-6));

        let mut plus = vec![0.0; 32 * 32];
        let mut minus = vec![0.0; 32 * 32];
        assert_eq!(gb_simulation_fields(sim, plus.as_mut_ptr(), minus.as_mut_ptr(), plus.len()), GbStatus::Ok);
        let max = plus.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - d[1]).abs() <= 1e-15 * max);

        assert_eq!(gb_simulation_fields(sim, plus.as_mut_ptr(), minus.as_mut_ptr(), 10), GbStatus::BufferTooSmall);
        assert!(last_error().contains("need 1024"));
        gb_simulation_free(sim);
    }
}

#[test]
fn config_errors_carry_line() {
    let cfg = CString::new("grid.n1 = 32\nbogus.key = 1\n").unwrap();
    let mut sim = ptr::null_mut();
    let st = unsafe { gb_simulation_new(cfg.as_ptr(), &mut sim) };
    assert_eq!(st, GbStatus::Config);
    assert!(sim.is_null());
    assert!(last_error().contains("line 2"), "{}", last_error());
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(gb_simulation_new(ptr::null(), ptr::null_mut()), GbStatus::NullPointer);
        assert_eq!(gb_simulation_step(ptr::null_mut(), 1), GbStatus::NullPointer);
        let mut t = 0.0;
        assert_eq!(gb_simulation_time(ptr::null(), &mut t), GbStatus::NullPointer);
        assert_eq!(gb_certify(2.0, 1e-3, f64::NAN, 1.0, 1.0, 256, ptr::null_mut()), GbStatus::NullPointer);
        gb_simulation_free(ptr::null_mut());
        gb_certificate_free(ptr::null_mut());
    }
}

#[test]
fn certificate_round_trip() {
    let mut cert = ptr::null_mut();
    unsafe {
        assert_eq!(gb_certify(2.0, 1e-3, f64::NAN, 1.0, 1.0, 256, &mut cert), GbStatus::Ok);
        let (mut pass, mut n, mut worst) = (false, 0usize, 0.0);
        assert_eq!(gb_certificate_summary(cert, &mut pass, &mut n, &mut worst), GbStatus::Ok);
        assert!(pass);
        assert!(n >= 256);
        assert!(worst < 0.0);
        let mut m = vec![0.0; n];
        let mut e = vec![0.0; n];
        assert_eq!(gb_certificate_column(cert, GbCertColumn::Margin, m.as_mut_ptr(), n), GbStatus::Ok);
        assert_eq!(gb_certificate_column(cert, GbCertColumn::ErrorBound, e.as_mut_ptr(), n), GbStatus::Ok);
        let w = m.iter().zip(&e).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(w, worst);
        gb_certificate_free(cert);

        assert_eq!(gb_certify(1.5, 0.9, f64::NAN, 1.0, 1.0, 256, &mut cert), GbStatus::InvalidArgument);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn kernel_matches_poisson() {
    let radii = [0.0, 0.5, 2.0, 10.0];
    let mut out = [0.0; 4];
    unsafe {
        assert_eq!(gb_kernel(1.0, radii.as_ptr(), radii.len(), out.as_mut_ptr()), GbStatus::Ok);
        assert_eq!(gb_kernel(3.0, radii.as_ptr(), radii.len(), out.as_mut_ptr()), GbStatus::InvalidArgument);
    }
    for (r, v) in radii.iter().zip(&out) {
        let exact = (1.0 + r * r).powf(-1.5) / (2.0 * std::f64::consts::PI);
        assert!((v - exact).abs() <= 1e-10 * exact);
    }
}

#[test]
fn errors_are_thread_local() {
    let cfg = CString::new("model.alpha = 7\n").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { gb_simulation_new(cfg.as_ptr(), &mut sim) }, GbStatus::Config);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
    assert!(!last_error().is_empty());
}
