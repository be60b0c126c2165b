//! End-to-end runs of the `qpt-metrology` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qpt-metrology");

const BJ_SCAN: &str = r#"experiment = "bj-scan"
[model]
n = 8
omega_f = 0.25
beta_1 = 2.0
beta_2 = 0.5
[grid]
phi_points = 9
endpoint_points = 7
endpoint_tolerance = 1e-3
[evolution]
dt = 1e-2
"#;

const ISING_SCALING: &str = r#"experiment = "ising-scaling"
[model]
n = 3
tau = 4.0
[grid]
n_values = [3, 4, 5]
endpoint_points = 5
endpoint_tolerance = 1e-2
[evolution]
dt = 1e-2
"#;

fn qpt(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("QPT_WORKERS").env("RUST_LOG", "error");
    if let Some(w) = workers {
        cmd.args(["--workers", w]);
    }
    cmd.output().expect("binary runs")
}

fn run_manifest(sub: &str, text: &str, dir: &Path, workers: Option<&str>) -> Output {
    let manifest = dir.join("manifest.toml");
    fs::write(&manifest, text).unwrap();
    let out = dir.join("out");
    qpt(&[sub, "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()], workers)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run_manifest("bj-scan", BJ_SCAN, d.path(), Some("2"));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (csv_files(&a.path().join("out")), csv_files(&b.path().join("out")));
    let names: Vec<_> = x.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["fringe_fit.csv", "phase_scan.csv"]);
    assert_eq!(x, y);
    let scan = String::from_utf8(x[1].1.clone()).unwrap();
    assert_eq!(scan.lines().count(), 10);
    assert!(scan.lines().skip(1).all(|l| l.ends_with(",ok")), "{scan}");
    let o = qpt(&["plot-script", "--out", a.path().join("out").to_str().unwrap()], None);
    let script = String::from_utf8(o.stdout).unwrap();
    assert!(script.contains("phase_scan.csv") && script.contains("pngcairo"), "{script}");
}

#[test]
fn worker_count_does_not_change_numerics() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, w) in [(&a, "1"), (&b, "3")] {
        let o = run_manifest("ising-scaling", ISING_SCALING, d.path(), Some(w));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (csv_files(&a.path().join("out")), csv_files(&b.path().join("out")));
    assert_eq!(x.len(), 2);
    assert_eq!(x, y);
    let log = fs::read_to_string(b.path().join("out/run.log")).unwrap();
    assert!(log.contains("workers=3"), "{log}");
}

#[test]
fn invalid_manifest_exits_two_and_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let o = run_manifest("bj-scan", &BJ_SCAN.replace("omega_f = 0.25", "omega_f = 1.5"), d.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega_f"));
    assert!(!d.path().join("out").exists());

    let o = run_manifest("bj-scan", &BJ_SCAN.replace("[grid]", "[grid]\nbogus = 1"), d.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("out").exists());

    let o = run_manifest("ising-scan", BJ_SCAN, d.path(), None);
    assert_eq!(o.status.code(), Some(2), "subcommand and experiment disagree");
    assert!(!d.path().join("out").exists());
}

#[test]
fn missing_manifest_is_an_io_failure() {
    let o = qpt(&["run", "--manifest", "/nonexistent/manifest.toml"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generic_run_and_plot_script() {
    let d = tempfile::tempdir().unwrap();
    let text = "experiment = \"roundtrip\"\nsystem = \"bj\"\n[model]\nn = 6\nbeta_1 = 1.0\nbeta_2 = 1.0\n\
                [evolution]\ndt = 1e-2\n";
    let o = run_manifest("run", text, d.path(), Some("1"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    let rt = fs::read_to_string(out.join("roundtrip.csv")).unwrap();
    assert!(rt.starts_with("fidelity,"), "{rt}");
    let resolved = fs::read_to_string(out.join("manifest.resolved.toml")).unwrap();
    assert!(resolved.contains("omega_0"), "defaults are spelled out: {resolved}");

    let o = qpt(&["plot-script", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success());
    let script = String::from_utf8(o.stdout).unwrap();
    assert!(script.contains("no known CSV"), "{script}");
}
