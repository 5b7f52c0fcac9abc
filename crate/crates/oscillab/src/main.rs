use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oscillab::config::ExperimentConfig;
use oscillab::experiments;

/// Reproducible experiments on oscillatory integral operators: seeded
/// runs, CSV/JSON reports, exit code 0 iff every acceptance gate passes.
#[derive(Parser)]
#[command(name = "oscillab", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form transform of an indicator, its singular averages, and
    /// BMO divergence of truncations
    BmoCounterexample(RunArgs),
    /// Unboundedness ratios for indicator pairs over an epsilon ladder
    LpCounterexample(RunArgs),
    /// Localized amplitude Fourier coefficients: decay fit and operator
    /// reconstruction
    FourierSeries(RunArgs),
    /// Randomized norm-ratio sweeps across a resolution ladder
    Sweep(RunArgs),
    /// Cutoff-composition expansion: exactness, remainder decay, order
    /// comparison
    Composition(RunArgs),
    /// Reproducing identities and scale-kernel constants
    KernelCheck(RunArgs),
    /// Carleson measures, paraproduct symbol seminorms, embedding bounds
    CarlesonCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted means the experiment's canonical defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the CSV and JSON report files
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(name: &str, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(name)?,
    };
    if cfg.experiment != name {
        anyhow::bail!(
            "config names experiment '{}' but the '{name}' subcommand was invoked",
            cfg.experiment
        );
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn execute(name: &str, args: &RunArgs) -> anyhow::Result<bool> {
    let cfg = resolve(name, args)?;
    let report = experiments::run(&cfg)?;
    let (csv_path, json_path) = report.write_files(&cfg.out_dir())?;
    print!("{}", report.summary());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.cmd {
        Command::BmoCounterexample(a) => ("bmo-counterexample", a),
        Command::LpCounterexample(a) => ("lp-counterexample", a),
        Command::FourierSeries(a) => ("fourier-series", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Composition(a) => ("composition", a),
        Command::KernelCheck(a) => ("kernel-check", a),
        Command::CarlesonCheck(a) => ("carleson-check", a),
    };
    match execute(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
