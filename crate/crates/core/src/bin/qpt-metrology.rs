use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpt_metrology::manifest::{ExperimentKind, RunManifest};
use qpt_metrology::runner::{execute, plot_script, with_dt};
use qpt_metrology::Error;

/// Batch runs of the phase-transition interferometers.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bose-Josephson phase scan.
    BjScan(RunArgs),
    /// Bose-Josephson Δφ_min versus N.
    BjScaling(RunArgs),
    /// Ising chain phase scan.
    IsingScan(RunArgs),
    /// Ising chain Δφ_min versus N.
    IsingScaling(RunArgs),
    /// Split then sweep back to the start; reports the fidelity.
    Roundtrip(RunArgs),
    /// Optimize Ω_end or τ′.
    OptimizeRecombination(RunArgs),
    /// Entangled state after the splitting sweep.
    SplittingState(RunArgs),
    /// Whatever experiment the manifest names.
    Run(RunArgs),
    /// Print a gnuplot script for the CSVs in a directory.
    PlotScript {
        #[arg(long, default_value = "qpt-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; overrides the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "QPT_WORKERS")]
    workers: Option<usize>,
    /// Override `evolution.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Accepted for CI scripts; no random numbers are drawn anywhere.
    #[arg(long)]
    seedless: bool,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}

fn run(kind: Option<ExperimentKind>, args: RunArgs) -> Result<(), Error> {
    let mut m = RunManifest::parse_file(&args.manifest)?;
    if let Some(k) = kind {
        if k != m.experiment {
            return Err(Error::Manifest(format!(
                "subcommand '{k}' does not match experiment '{}' in {}",
                m.experiment,
                args.manifest.display()
            )));
        }
    }
    if args.workers.is_some() {
        m.workers = args.workers;
    }
    m.evolution = with_dt(&m.evolution, args.dt);
    if args.seedless {
        log::info!("seedless: no random number generator is used");
    }
    let out = args.out.or_else(|| m.output.clone()).unwrap_or_else(|| PathBuf::from("qpt-out"));
    let report = execute(&m, &out)?;
    if report.point_failures > 0 {
        log::warn!("{} grid points failed; see the status column", report.point_failures);
    }
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::PlotScript { out } => {
            print!("{}", plot_script(&out));
            return ExitCode::SUCCESS;
        }
        Command::BjScan(a) => (Some(ExperimentKind::BjScan), a),
        Command::BjScaling(a) => (Some(ExperimentKind::BjScaling), a),
        Command::IsingScan(a) => (Some(ExperimentKind::IsingScan), a),
        Command::IsingScaling(a) => (Some(ExperimentKind::IsingScaling), a),
        Command::Roundtrip(a) => (Some(ExperimentKind::Roundtrip), a),
        Command::OptimizeRecombination(a) => (Some(ExperimentKind::OptimizeRecombination), a),
        Command::SplittingState(a) => (Some(ExperimentKind::SplittingState), a),
        Command::Run(a) => (None, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
