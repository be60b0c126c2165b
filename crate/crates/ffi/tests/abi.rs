use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qpt_metrology_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qpt_last_error()) }.to_string_lossy().into_owned()
}

fn quick_bj(n: usize) -> QptBjConfig {
    QptBjConfig {
        beta_1: 1.0,
        beta_2: 0.1,
        ..qpt_bj_config_default(n, 0.0)
    }
}

#[test]
fn bj_handle_lifecycle() {
    let cfg = QptBjConfig {
        omega_end: 5.0,
        ..quick_bj(6)
    };
    let mut h: *mut QptBj = ptr::null_mut();
    assert_eq!(unsafe { qpt_bj_new(&cfg, 1e-2, &mut h) }, QptStatus::Ok);
    assert!(!h.is_null());
    let (mut plus, mut minus) = (QptOutcome::default(), QptOutcome::default());
    unsafe {
        assert_eq!(qpt_bj_run(h, 0.05, &mut plus), QptStatus::Ok);
        assert_eq!(qpt_bj_run(h, -0.05, &mut minus), QptStatus::Ok);
    }
    assert!((plus.mean + minus.mean).abs() < 1e-8);
    assert!(plus.variance >= 0.0 && plus.norm_drift < 1e-8);
    let mut d = 0.0;
    assert_eq!(unsafe { qpt_bj_phase_uncertainty(h, 0.0, 1e-3, &mut d) }, QptStatus::Ok);
    assert!(d.is_finite() && d > 0.0);
    let (mut w, mut dp) = (0.0, 0.0);
    assert_eq!(unsafe { qpt_bj_optimize_endpoint(h, &mut w, &mut dp) }, QptStatus::Ok);
    assert!(w > 1.0 && w <= 11.0 && dp > 0.0);
    unsafe { qpt_bj_free(h) };
}

#[test]
fn validation_errors_map_to_status_and_message() {
    let cfg = QptBjConfig {
        omega_f: 3.0,
        ..quick_bj(4)
    };
    let mut h: *mut QptBj = ptr::null_mut();
    assert_eq!(unsafe { qpt_bj_new(&cfg, 0.0, &mut h) }, QptStatus::Validation);
    assert!(h.is_null());
    assert!(last_error().contains("omega_f"), "{}", last_error());

    let bad_axis = QptBjConfig {
        pulse_axis: 7,
        ..quick_bj(4)
    };
    assert_eq!(unsafe { qpt_bj_new(&bad_axis, 0.0, &mut h) }, QptStatus::InvalidArgument);
    assert_eq!(unsafe { qpt_bj_new(ptr::null(), 0.0, &mut h) }, QptStatus::InvalidArgument);
    assert!(last_error().contains("config"));
}

#[test]
fn unresolved_endpoint_is_reported() {
    let mut h: *mut QptBj = ptr::null_mut();
    assert_eq!(unsafe { qpt_bj_new(&quick_bj(4), 1e-2, &mut h) }, QptStatus::Ok);
    let mut o = QptOutcome::default();
    assert_eq!(unsafe { qpt_bj_run(h, 0.0, &mut o) }, QptStatus::Validation);
    assert_eq!(unsafe { qpt_bj_set_omega_end(h, 20.0) }, QptStatus::Validation);
    assert_eq!(unsafe { qpt_bj_set_omega_end(h, 4.0) }, QptStatus::Ok);
    assert_eq!(unsafe { qpt_bj_run(h, 0.0, &mut o) }, QptStatus::Ok);
    unsafe { qpt_bj_free(h) };
    unsafe { qpt_bj_free(ptr::null_mut()) };
}

#[test]
fn ising_handle_lifecycle() {
    let cfg = qpt_ising_config_default(3, 20.0);
    let mut h: *mut QptIsing = ptr::null_mut();
    assert_eq!(unsafe { qpt_ising_new(&cfg, 0.0, &mut h) }, QptStatus::Ok);
    let mut f = 0.0;
    assert_eq!(unsafe { qpt_ising_roundtrip_fidelity(h, &mut f) }, QptStatus::Ok);
    assert!(f > 0.99, "{f}");
    let (mut tp, mut dp) = (0.0, 0.0);
    assert_eq!(unsafe { qpt_ising_optimize_tau_prime(h, &mut tp, ptr::null_mut()) }, QptStatus::Ok);
    assert!((10.0..=20.0).contains(&tp));
    assert_eq!(unsafe { qpt_ising_phase_uncertainty(h, 0.0, 1e-3, &mut dp) }, QptStatus::Ok);
    assert!(dp * 3.0 < 1.5, "{dp}");
    assert_eq!(unsafe { qpt_ising_set_tau_prime(h, 5.0) }, QptStatus::Validation);
    unsafe { qpt_ising_free(h) };
}

#[test]
fn manifest_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(&manifest, "experiment = \"roundtrip\"\nsystem = \"ising\"\n[model]\nn = 3\ntau = 20.0\n").unwrap();
    let m = CString::new(manifest.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { qpt_run_manifest(m.as_ptr(), out.as_ptr()) }, QptStatus::Ok);
    assert!(dir.path().join("out/roundtrip.csv").exists());
    assert_eq!(unsafe { qpt_run_manifest(ptr::null(), out.as_ptr()) }, QptStatus::InvalidArgument);
    let missing = CString::new("/nonexistent/m.toml").unwrap();
    assert_eq!(unsafe { qpt_run_manifest(missing.as_ptr(), out.as_ptr()) }, QptStatus::Io);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(qpt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a small C program against the generated header when a C
/// compiler is on the path.
#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/qpt_metrology.h");
    assert!(header.exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"qpt_metrology.h\"\n\
         int main(void) {\n\
           QptBjConfig c = qpt_bj_config_default(10, 0.0);\n\
           QptBj *h = 0;\n\
           QptStatus s = qpt_bj_new(&c, 0.0, &h);\n\
           (void)s; qpt_bj_free(h);\n\
           return c.pulse_axis == QPT_AXIS_X ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; skipping header compile check"),
    }
}
