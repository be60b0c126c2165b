//! Executes a [`RunManifest`] and writes its CSV artifacts.
//!
//! Every CSV is fully determined by the manifest: floats are written with
//! 17 significant digits, rows follow grid order and nothing time-dependent
//! goes into them. Wall-clock information lives in `run.log` only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{
    bj_scaling_study, fit_sinusoid, ising_scaling_study, optimize_bj_endpoint,
    optimize_ising_tau_prime, scan_phase, EndpointOptimum, EndpointSearch, PhaseScanRecord, ScalingOptions,
    ScalingStudy,
};
use crate::collective_spin::{parity_expectation, DickeState};
use crate::error::{Error, Result};
use crate::ising::{global_flip_parity_expectation, mz_moments};
use crate::manifest::{ExperimentKind, GridSpec, ModelConfig, RunManifest};
use crate::propagator::{fidelity, EvolutionSettings};
use crate::protocol::{
    bj_splitting_adiabaticity, ghz_fidelity, BjInterferometer, BjProtocolConfig, IsingInterferometer,
    IsingProtocolConfig,
};

pub const PHASE_SCAN_CSV: &str = "phase_scan.csv";
pub const FRINGE_FIT_CSV: &str = "fringe_fit.csv";
pub const SCALING_CSV: &str = "scaling.csv";
pub const SCALING_SUMMARY_CSV: &str = "scaling_summary.csv";
pub const ROUNDTRIP_CSV: &str = "roundtrip.csv";
pub const ENDPOINT_SCAN_CSV: &str = "endpoint_scan.csv";
pub const OPTIMUM_CSV: &str = "optimum.csv";
pub const SPLITTING_STATE_CSV: &str = "splitting_state.csv";
pub const SPLITTING_SUMMARY_CSV: &str = "splitting_summary.csv";
pub const ADIABATICITY_CSV: &str = "adiabaticity.csv";
pub const RESOLVED_MANIFEST: &str = "manifest.resolved.toml";
pub const RUN_LOG: &str = "run.log";

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Grid points that failed and were marked in their rows.
    pub point_failures: usize,
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct Log {
    lines: Vec<String>,
}

impl Log {
    fn line(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::info!("{msg}");
        self.lines.push(msg);
    }
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn status(error: &Option<String>) -> String {
    error.clone().map_or_else(|| "ok".to_string(), |e| format!("error: {e}"))
}

fn search_of(grid: &GridSpec) -> EndpointSearch {
    EndpointSearch {
        grid_points: grid.endpoint_points,
        bracket: grid.endpoint_bracket.map(|[lo, hi]| (lo, hi)),
        tolerance: grid.endpoint_tolerance,
        delta: grid.delta_phi,
    }
}

/// Validates, then runs the experiment on a pool of `manifest.workers`
/// threads (all cores when unset) and writes artifacts into `out_dir`.
/// Nothing is written when validation fails.
pub fn execute(manifest: &RunManifest, out_dir: &Path) -> Result<RunReport> {
    manifest.validate()?;
    let resolved = manifest.to_toml()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = manifest.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(RESOLVED_MANIFEST), resolved)?;
    let mut out = Out {
        dir: out_dir,
        files: vec![out_dir.join(RESOLVED_MANIFEST)],
    };
    let mut log = Log { lines: Vec::new() };
    log.line(format!(
        "qpt-metrology {} experiment={} workers={}",
        env!("CARGO_PKG_VERSION"),
        manifest.experiment,
        pool.current_num_threads()
    ));
    log.line(format!("evolution dt={} norm_tolerance={}", manifest.evolution.dt, manifest.evolution.norm_tolerance));
    let started = Instant::now();
    let result = pool.install(|| dispatch(manifest, &mut out, &mut log));
    log.line(format!("elapsed {:.3} s", started.elapsed().as_secs_f64()));
    if let Err(e) = &result {
        log.line(format!("hard failure: {e}"));
    }
    let mut text = log.lines.join("\n");
    text.push('\n');
    fs::write(out_dir.join(RUN_LOG), text)?;
    out.files.push(out_dir.join(RUN_LOG));
    let point_failures = result?;
    Ok(RunReport {
        files: out.files,
        point_failures,
    })
}

fn dispatch(m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    match (m.experiment, &m.model) {
        (ExperimentKind::BjScan, ModelConfig::Bj(c)) => bj_scan(c, m, out, log),
        (ExperimentKind::IsingScan, ModelConfig::Ising(c)) => ising_scan(c, m, out, log),
        (ExperimentKind::BjScaling, ModelConfig::Bj(c)) => bj_scaling(c, m, out, log),
        (ExperimentKind::IsingScaling, ModelConfig::Ising(c)) => ising_scaling(c, m, out, log),
        (ExperimentKind::Roundtrip, model) => roundtrip(model, m, out, log),
        (ExperimentKind::OptimizeRecombination, model) => optimize_recombination(model, m, out, log),
        (ExperimentKind::SplittingState, model) => splitting_state(model, m, out, log),
        (kind, _) => Err(Error::Manifest(format!("experiment '{kind}' does not match the model"))),
    }
}

fn log_seconds(m: &RunManifest, n: usize, label: &str, t: f64, log: &mut Log) {
    if let (Some(hz), ModelConfig::Bj(_)) = (m.chi_over_n_hz, &m.model) {
        log.line(format!("{label}: t = {t} ≈ {:.3} s at |χ|/N = {hz} Hz", t / (hz * n as f64)));
    }
}

fn log_optimum(label: &str, opt: &EndpointOptimum, n: usize, log: &mut Log) {
    log.line(format!(
        "optimized {label} = {} (Δφ·N = {:.6}, {} evaluations)",
        opt.argument,
        opt.delta_phi * n as f64,
        opt.evaluations
    ));
}

fn write_scan(records: &[PhaseScanRecord], n: usize, endpoint: f64, out: &mut Out, log: &mut Log) -> Result<usize> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                format_float(r.phi),
                format_float(r.mean),
                format_float(r.second_moment),
                format_float(r.delta_phi),
                format_float(r.norm_drift),
                format_float(r.parity_drift),
                status(&r.error),
            ]
        })
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    for r in records.iter().filter(|r| r.error.is_some()) {
        log.line(format!("point φ = {} failed: {}", r.phi, r.error.as_deref().unwrap_or_default()));
    }
    out.csv(
        PHASE_SCAN_CSV,
        &["phi", "mean", "second_moment", "delta_phi", "norm_drift", "parity_drift", "status"],
        &rows,
    )?;
    let max_norm = records.iter().map(|r| r.norm_drift).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let max_parity = records.iter().map(|r| r.parity_drift).filter(|d| d.is_finite()).fold(0.0, f64::max);
    log.line(format!("max norm drift {max_norm:.3e}, max parity drift {max_parity:.3e}"));

    let header = ["endpoint", "amplitude", "c", "rms_residual", "relative_residual", "window", "points", "status"];
    let row = match fit_sinusoid(records, n, None) {
        Ok(f) => {
            log.line(format!("fringe fit: A = {:.6}, c = {:.6}, residual/A = {:.3e}", f.amplitude, f.c, f.relative_residual()));
            vec![
                format_float(endpoint),
                format_float(f.amplitude),
                format_float(f.c),
                format_float(f.rms_residual),
                format_float(f.relative_residual()),
                format_float(f.window),
                f.points.to_string(),
                "ok".into(),
            ]
        }
        Err(e) => {
            log.line(format!("fringe fit failed: {e}"));
            let nan = format_float(f64::NAN);
            vec![format_float(endpoint), nan.clone(), nan.clone(), nan.clone(), nan.clone(), nan, "0".into(), format!("error: {e}")]
        }
    };
    out.csv(FRINGE_FIT_CSV, &header, &[row])?;
    Ok(failures)
}

fn bj_engine(c: &BjProtocolConfig, m: &RunManifest, log: &mut Log) -> Result<BjInterferometer> {
    let mut engine = BjInterferometer::new(c, &m.evolution)?;
    log.line(format!("splitting norm drift {:.3e}", engine.splitting_diagnostics().norm_drift));
    if c.omega_end.is_none() {
        if !m.grid.optimize_endpoint {
            return Err(Error::Manifest("model.omega_end: required when grid.optimize_endpoint = false".into()));
        }
        let opt = optimize_bj_endpoint(&engine, &search_of(&m.grid))?;
        log_optimum("Ω_end", &opt, c.n, log);
        engine.set_omega_end(Some(opt.argument))?;
    }
    Ok(engine)
}

fn ising_engine(c: &IsingProtocolConfig, m: &RunManifest, log: &mut Log) -> Result<IsingInterferometer> {
    let mut engine = IsingInterferometer::new(c, &m.evolution)?;
    log.line(format!("splitting norm drift {:.3e}", engine.splitting_diagnostics().norm_drift));
    if c.tau_prime.is_none() && m.grid.optimize_endpoint {
        let opt = optimize_ising_tau_prime(&engine, &search_of(&m.grid))?;
        log_optimum("τ′", &opt, c.n, log);
        engine.set_tau_prime(Some(opt.argument))?;
    }
    Ok(engine)
}

fn bj_scan(c: &BjProtocolConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let engine = bj_engine(c, m, log)?;
    let end = engine.config().omega_end.expect("resolved");
    log_seconds(m, c.n, "splitting", engine.splitting_duration(), log);
    log_seconds(m, c.n, "recombination", engine.recombination_duration(end)?, log);
    let records = scan_phase(&engine, &m.grid.phi_grid(c.n), m.grid.delta_phi);
    write_scan(&records, c.n, end, out, log)
}

fn ising_scan(c: &IsingProtocolConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let engine = ising_engine(c, m, log)?;
    let tp = engine.config().resolved_tau_prime();
    let records = scan_phase(&engine, &m.grid.phi_grid(c.n), m.grid.delta_phi);
    write_scan(&records, c.n, tp, out, log)
}

fn scaling_options(grid: &GridSpec, optimize: bool) -> ScalingOptions {
    ScalingOptions {
        search: search_of(grid),
        optimize,
        fit_points: grid.fit_points,
        delta: grid.delta_phi,
    }
}

fn write_scaling(study: &ScalingStudy, ns: &[usize], endpoint: &str, out: &mut Out, log: &mut Log) -> Result<usize> {
    let nan = || format_float(f64::NAN);
    let rows: Vec<Vec<String>> = ns
        .iter()
        .map(|&n| {
            if let Some(p) = study.points.iter().find(|p| p.n == n) {
                log.line(format!("N = {n}: Δφ_min = {:.6e} (Δφ·N = {:.4}), {endpoint} = {}", p.delta_phi_min, p.delta_phi_min * n as f64, p.endpoint));
                vec![
                    n.to_string(),
                    format_float(p.delta_phi_min),
                    format_float(p.endpoint),
                    p.fit.map_or_else(nan, |f| format_float(f.amplitude)),
                    p.fit.map_or_else(nan, |f| format_float(f.c)),
                    format_float(p.second_moment),
                    format_float(p.norm_drift),
                    format_float(p.parity_drift),
                    "ok".into(),
                ]
            } else {
                let e = study.failures.iter().find(|f| f.0 == n).map_or("unknown", |f| f.1.as_str());
                log.line(format!("N = {n} failed: {e}"));
                let mut row = vec![n.to_string()];
                row.extend((0..7).map(|_| nan()));
                row.push(format!("error: {e}"));
                row
            }
        })
        .collect();
    out.csv(
        SCALING_CSV,
        &["n", "delta_phi_min", endpoint, "fit_A", "fit_c", "second_moment", "norm_drift", "parity_drift", "status"],
        &rows,
    )?;
    let summary = match &study.fit {
        Some(f) => {
            log.line(format!("log-log slope {:.6} ± {:.6}", f.slope, f.slope_stderr));
            vec![format_float(f.slope), format_float(f.slope_stderr), format_float(f.intercept), "ok".into()]
        }
        None => vec![nan(), nan(), nan(), "error: scaling fit needs every N to succeed".into()],
    };
    out.csv(SCALING_SUMMARY_CSV, &["slope", "slope_err", "intercept", "status"], &[summary])?;
    Ok(study.failures.len())
}

fn bj_scaling(c: &BjProtocolConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    if c.omega_end.is_none() && !m.grid.optimize_endpoint {
        return Err(Error::Manifest("model.omega_end: required when grid.optimize_endpoint = false".into()));
    }
    let ns = m.grid.n_values.clone().unwrap_or_default();
    let study = bj_scaling_study(c, &ns, &m.evolution, &scaling_options(&m.grid, c.omega_end.is_none()))?;
    write_scaling(&study, &ns, "omega_end_opt", out, log)
}

fn ising_scaling(c: &IsingProtocolConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let ns = m.grid.n_values.clone().unwrap_or_default();
    let optimize = c.tau_prime.is_none() && m.grid.optimize_endpoint;
    let study = ising_scaling_study(c, &ns, &m.evolution, &scaling_options(&m.grid, optimize))?;
    write_scaling(&study, &ns, "tau_prime_opt", out, log)
}

fn roundtrip(model: &ModelConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let (f, split, recombine) = match model {
        ModelConfig::Bj(c) => {
            let engine = BjInterferometer::new(c, &m.evolution)?;
            let split = engine.splitting_duration();
            let recombine = engine.recombination_duration(c.omega_0)?;
            log_seconds(m, c.n, "splitting", split, log);
            log_seconds(m, c.n, "recombination", recombine, log);
            (engine.roundtrip_fidelity()?, split, recombine)
        }
        ModelConfig::Ising(c) => {
            let engine = IsingInterferometer::new(c, &m.evolution)?;
            (engine.roundtrip_fidelity()?, c.tau, c.tau)
        }
    };
    log.line(format!("round-trip fidelity {f:.12}"));
    out.csv(
        ROUNDTRIP_CSV,
        &["fidelity", "duration_split", "duration_recombine"],
        &[vec![format_float(f), format_float(split), format_float(recombine)]],
    )?;
    Ok(0)
}

fn optimize_recombination(model: &ModelConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let search = search_of(&m.grid);
    let (opt, n, label) = match model {
        ModelConfig::Bj(c) => (optimize_bj_endpoint(&BjInterferometer::new(c, &m.evolution)?, &search)?, c.n, "omega_end"),
        ModelConfig::Ising(c) => (
            optimize_ising_tau_prime(&IsingInterferometer::new(c, &m.evolution)?, &search)?,
            c.n,
            "tau_prime",
        ),
    };
    log_optimum(label, &opt, n, log);
    let nf = n as f64;
    let rows: Vec<Vec<String>> = opt
        .grid
        .iter()
        .map(|&(x, d)| vec![format_float(x), format_float(d), format_float(d * nf)])
        .collect();
    out.csv(ENDPOINT_SCAN_CSV, &[label, "delta_phi", "delta_phi_times_n"], &rows)?;
    out.csv(
        OPTIMUM_CSV,
        &[label, "delta_phi", "delta_phi_times_n", "evaluations"],
        &[vec![
            format_float(opt.argument),
            format_float(opt.delta_phi),
            format_float(opt.delta_phi * nf),
            opt.evaluations.to_string(),
        ]],
    )?;
    Ok(0)
}

fn splitting_state(model: &ModelConfig, m: &RunManifest, out: &mut Out, log: &mut Log) -> Result<usize> {
    let amplitude_rows = |amps: &[num_complex::Complex64], label: &dyn Fn(usize) -> String| -> Vec<Vec<String>> {
        amps.iter()
            .enumerate()
            .map(|(k, a)| vec![k.to_string(), label(k), format_float(a.re), format_float(a.im), format_float(a.norm_sqr())])
            .collect()
    };
    let header = ["index", "label", "re", "im", "probability"];
    let summary_header = ["norm", "second_moment", "parity", "cat_fidelity", "norm_drift", "parity_drift"];
    match model {
        ModelConfig::Bj(c) => {
            let engine = BjInterferometer::new(c, &m.evolution)?;
            log_seconds(m, c.n, "splitting", engine.splitting_duration(), log);
            let s = engine.split_state();
            let d = engine.splitting_diagnostics();
            let half = c.n as f64 / 2.0;
            out.csv(
                SPLITTING_STATE_CSV,
                &header,
                &amplitude_rows(s.amplitudes(), &|k| format!("{}", k as f64 - half)),
            )?;
            let cat = fidelity(DickeState::even_cat(c.n)?.amplitudes(), s.amplitudes())?;
            log.line(format!("cat fidelity {cat:.12}"));
            out.csv(
                SPLITTING_SUMMARY_CSV,
                &summary_header,
                &[vec![
                    format_float(s.norm_sqr()),
                    format_float(s.jz_moments().1),
                    format_float(parity_expectation(&s)),
                    format_float(cat),
                    format_float(d.norm_drift),
                    format_float(d.parity_drift),
                ]],
            )?;
            if let Some(samples) = m.grid.adiabaticity_samples {
                let pops = bj_splitting_adiabaticity(c, &m.evolution, samples)?;
                let worst = pops.iter().map(|p| p.1).fold(1.0, f64::min);
                log.line(format!("lowest even ground-state population {worst:.12}"));
                let rows: Vec<Vec<String>> = pops.iter().map(|&(t, p)| vec![format_float(t), format_float(p)]).collect();
                out.csv(ADIABATICITY_CSV, &["t", "ground_population"], &rows)?;
            }
        }
        ModelConfig::Ising(c) => {
            let engine = IsingInterferometer::new(c, &m.evolution)?;
            let s = engine.split_state();
            let d = engine.splitting_diagnostics();
            let n = c.n;
            out.csv(
                SPLITTING_STATE_CSV,
                &header,
                &amplitude_rows(s.amplitudes(), &|k| format!("{k:0n$b}")),
            )?;
            let ghz = ghz_fidelity(&s);
            log.line(format!("GHZ fidelity {ghz:.12}"));
            out.csv(
                SPLITTING_SUMMARY_CSV,
                &summary_header,
                &[vec![
                    format_float(s.norm_sqr()),
                    format_float(mz_moments(&s).1),
                    format_float(global_flip_parity_expectation(&s)),
                    format_float(ghz),
                    format_float(d.norm_drift),
                    format_float(d.parity_drift),
                ]],
            )?;
        }
    }
    Ok(0)
}

/// A gnuplot script for whichever known CSVs exist in `dir`.
pub fn plot_script(dir: &Path) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset grid\n");
    let has = |name: &str| dir.join(name).exists();
    let path = |name: &str| dir.join(name).display().to_string().replace('\'', "''");
    let mut plots = 0;
    let mut add = |s: &mut String, body: String| {
        plots += 1;
        s.push_str(&format!("\nset term pngcairo\nset output '{}'\n", path(&format!("plot{plots}.png"))));
        s.push_str(&body);
        s.push_str("unset output\n");
    };
    if has(PHASE_SCAN_CSV) {
        let p = path(PHASE_SCAN_CSV);
        add(&mut s, format!("set xlabel 'phi'\nset ylabel 'mean'\nplot '{p}' using 1:2 with linespoints\n"));
        add(&mut s, format!("set xlabel 'phi'\nset ylabel 'delta phi'\nset logscale y\nplot '{p}' using 1:4 with linespoints\nunset logscale y\n"));
    }
    if has(SCALING_CSV) {
        let p = path(SCALING_CSV);
        add(
            &mut s,
            format!("set xlabel 'N'\nset ylabel 'delta phi min'\nset logscale xy\nplot '{p}' using 1:2 with linespoints, '{p}' using 1:(1/$1) with lines title '1/N'\nunset logscale xy\n"),
        );
    }
    if has(ENDPOINT_SCAN_CSV) {
        let p = path(ENDPOINT_SCAN_CSV);
        add(&mut s, format!("set xlabel 'endpoint'\nset ylabel 'delta phi N'\nplot '{p}' using 1:3 with linespoints\n"));
    }
    if has(SPLITTING_STATE_CSV) {
        let p = path(SPLITTING_STATE_CSV);
        add(&mut s, format!("set xlabel 'index'\nset ylabel 'probability'\nplot '{p}' using 1:5 with impulses\n"));
    }
    if has(ADIABATICITY_CSV) {
        let p = path(ADIABATICITY_CSV);
        add(&mut s, format!("set xlabel 't'\nset ylabel 'ground-state population'\nplot '{p}' using 1:2 with lines\n"));
    }
    if plots == 0 {
        s.push_str("# no known CSV files found\n");
    }
    s
}

/// Settings after a command-line `dt` override.
pub fn with_dt(settings: &EvolutionSettings, dt: Option<f64>) -> EvolutionSettings {
    match dt {
        Some(dt) => EvolutionSettings { dt, ..*settings },
        None => *settings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn invalid_manifest_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut m = RunManifest::parse_str("experiment = \"roundtrip\"\nsystem = \"bj\"\n[model]\nn = 4\n").unwrap();
        m.evolution.dt = -1.0;
        assert!(execute(&m, &out).unwrap_err().is_validation());
        assert!(!out.exists());
    }

    #[test]
    fn plot_script_references_existing_csvs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(plot_script(dir.path()).contains("no known CSV"));
        fs::write(dir.path().join(PHASE_SCAN_CSV), "phi\n").unwrap();
        let s = plot_script(dir.path());
        assert!(s.contains(PHASE_SCAN_CSV) && !s.contains(SCALING_CSV));
    }
}
