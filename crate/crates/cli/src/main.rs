use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use decompound::experiments::verify::VerifyOptions;
use decompound::experiments::{bvm, identifiability, rate, spectral_sweep, verify, ExperimentConfig, Row, RunReport};

/// Periodic compound Poisson decompounding experiments.
#[derive(Parser, Debug)]
#[command(name = "decompound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (JSON); defaults to the shipped preset for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV, schema and summary files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Use a deliberately broken adjoint (negative control for `verify`).
    #[arg(long, global = true, hide = true)]
    corrupt_adjoint: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Operator identity suite; exits nonzero if any identity fails.
    Verify,
    /// Characteristic-function agreement of identifiable and non-identifiable pairs.
    Identifiability,
    /// Posterior sup-norm contraction across sample sizes.
    RateSweep,
    /// Coverage and Gaussian-limit diagnostics for intensity, V(t) and M(t).
    Bvm,
    /// Spectral estimator error across sample sizes and cutoffs.
    Spectral,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Identifiability => "identifiability",
            Command::RateSweep => "rate-sweep",
            Command::Bvm => "bvm",
            Command::Spectral => "spectral",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
        }
        None => ExperimentConfig::preset(cli.command.name()).expect("every experiment command has a preset"),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| Path::new("out").join(cli.command.name()))
}

fn finish<R: Row>(report: &RunReport<R>, dir: &Path, config: &impl serde::Serialize) -> Result<bool> {
    let csv = report.write(dir, config).with_context(|| format!("writing reports to {}", dir.display()))?;
    println!("{}: {} rows -> {}", report.command, report.rows.len(), csv.display());
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    println!("{}: {}", report.command, if report.passed { "PASS" } else { "FAIL" });
    Ok(report.passed)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Verify => {
            let opts = VerifyOptions { corrupt_adjoint: cli.corrupt_adjoint, ..VerifyOptions::with_seed(cli.seed.unwrap_or(0)) };
            let report = verify::run(&opts)?;
            for row in report.rows.iter().filter(|r| !r.passed) {
                eprintln!(
                    "FAILED {} (seed {}, {}): residual {:e} > {:e}",
                    row.check, row.seed, row.wavelet, row.residual, row.tolerance
                );
            }
            let echo = serde_json::json!({
                "grid_points": opts.grid_points,
                "seeds": opts.seeds,
                "delta": opts.delta,
                "corrupt_adjoint": opts.corrupt_adjoint,
            });
            finish(&report, &out_dir(cli, None), &echo)
        }
        Command::Identifiability => {
            let cfg = load_config(cli)?;
            finish(&identifiability::run(&cfg)?, &out_dir(cli, Some(&cfg)), &cfg)
        }
        Command::RateSweep => {
            let cfg = load_config(cli)?;
            // trend verdicts are statistical; they are reported, not turned into exit codes
            finish(&rate::run(&cfg)?, &out_dir(cli, Some(&cfg)), &cfg).map(|_| true)
        }
        Command::Bvm => {
            let cfg = load_config(cli)?;
            finish(&bvm::run(&cfg)?, &out_dir(cli, Some(&cfg)), &cfg).map(|_| true)
        }
        Command::Spectral => {
            let cfg = load_config(cli)?;
            finish(&spectral_sweep::run(&cfg)?, &out_dir(cli, Some(&cfg)), &cfg).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
