//! `projrgg`: simulate projected random geometric graphs and test their
//! crossing and stress statistics.
//!
//! Exit status: 0 when every enabled test passes, 1 on a statistical
//! failure (or a replay that does not reproduce), 2 on a usage,
//! configuration or I/O error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{out_dir, RunOptions};
use config::LoadedConfig;
use manifest::{CommandKind, Manifest};

#[derive(Parser)]
#[command(name = "projrgg", version, about = "Crossings and stress of projected random geometric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the limit constants as CSV, closed form next to Monte Carlo.
    Constants {
        /// Dimension or inclusive range, e.g. `3` or `3..5`.
        #[arg(long = "d", value_parser = parse_dims)]
        dims: (usize, usize),
        /// Monte Carlo samples per constant.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the replications of a configuration and write the records.
    Simulate(RunArgs),
    /// Rerun a manifest and check that the records are byte-identical.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Poisson-limit battery in the sparse regime.
    PoissonTest(TestArgs),
    /// Normal-limit battery in the thermodynamic regime.
    CltTest(TestArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `$PROJRGG_OUT_DIR`, else `./projrgg-out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for the replications.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Run the tests on synthetic null data instead of simulations.
    #[arg(long)]
    calibrate: bool,
    /// Significance level (default: `tests.level` from the configuration).
    #[arg(long)]
    level: Option<f64>,
    /// Multiplier on the configured relative slacks.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), s.trim()),
    };
    let parse = |x: &str| x.parse::<usize>().map_err(|_| format!("not a dimension: {x}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo < 3 {
        return Err(format!("dimensions start at 3, got {lo}"));
    }
    if hi < lo {
        return Err(format!("empty range {lo}..{hi}"));
    }
    if hi > 12 {
        return Err(format!("dimensions above 12 are not supported, got {hi}"));
    }
    Ok((lo, hi))
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "--threads: must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot size the thread pool")?;
    }
    Ok(())
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_reports(out: &commands::RunOutput) {
    for r in &out.reports {
        println!("{} {} statistic={} {}", if r.passed { "PASS" } else { "FAIL" }, r.test, r.statistic, r.detail);
    }
}

fn run_command(kind: CommandKind, args: RunArgs, calibrate: bool, level: Option<f64>, scale: f64) -> Result<ExitCode> {
    let cfg = LoadedConfig::load(&args.config)?;
    set_threads(args.threads)?;
    let opts =
        RunOptions { command: kind, seed: args.seed, threads: args.threads, level, tolerance_scale: scale, calibrate };
    let out = commands::run(&cfg, &opts)?;
    let dir = out_dir(args.out_dir);
    out.write(&dir)?;
    print_reports(&out);
    if let Some((_, n)) = &out.records {
        eprintln!("wrote {n} records to {}", dir.display());
    }
    Ok(status(out.passed()))
}

fn replay(path: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> Result<ExitCode> {
    let m = Manifest::read(&path)?;
    let cfg = LoadedConfig::parse(&m.config).context("manifest config")?;
    set_threads(threads.or(m.threads))?;
    let opts = RunOptions {
        command: m.command,
        seed: Some(m.seed),
        threads: threads.or(m.threads),
        level: Some(m.level),
        tolerance_scale: m.tolerance_scale,
        calibrate: m.calibrate,
    };
    let rerun = commands::run(&cfg, &opts)?;
    let dir = out.unwrap_or_else(|| path.parent().unwrap_or(std::path::Path::new(".")).join("replay"));
    rerun.write(&dir)?;
    print_reports(&rerun);
    let same = rerun.manifest.records_sha256 == m.records_sha256 && rerun.manifest.passed == m.passed;
    if same {
        eprintln!("replay reproduced the recorded run in {}", dir.display());
    } else {
        eprintln!("replay differs from the recorded run (records or outcome)");
    }
    Ok(status(same))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants { dims: (lo, hi), samples, seed } => {
            commands::constants(lo, hi, samples, seed).map(|table| {
                print!("{table}");
                ExitCode::SUCCESS
            })
        }
        Command::Simulate(args) => run_command(CommandKind::Simulate, args, false, None, 1.0),
        Command::Replay { manifest, out_dir, threads } => replay(manifest, out_dir, threads),
        Command::PoissonTest(a) => {
            run_command(CommandKind::PoissonTest, a.run, a.calibrate, a.level, a.tolerance_scale)
        }
        Command::CltTest(a) => run_command(CommandKind::CltTest, a.run, a.calibrate, a.level, a.tolerance_scale),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
