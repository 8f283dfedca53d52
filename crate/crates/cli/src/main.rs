//! `stationize`: runs decompositions, stationarity checks and spike audits
//! from a TOML config and writes JSON/CSV reports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::json;
use stationize_core::Q;

use commands::{Output, Overrides};
use config::{Mode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "stationize", version, about = "Stationary measures on weighted free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults describe unit-weight F_2.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Verification depth in letters.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Largest accepted cylinder error, as a fraction or decimal.
    #[arg(long, global = true)]
    threshold: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Decompose a density into spikes; passes when the residual reaches the tolerance.
    Decompose,
    /// Check `μ⋆ν = ν'` on cylinders.
    Verify,
    /// Shadow Lemma, decay and spike audits.
    Audit,
    /// Moment and entropy of a measure or of a moment-schedule decomposition.
    Moments,
}

fn run(cli: &Cli) -> Result<i32> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ov = Overrides { depth: cli.depth, threshold: cli.threshold.clone() };
    if ov.depth == Some(0) {
        anyhow::bail!("--depth must be at least 1");
    }
    let out = Output::new(&cli.out)?;
    let code = match (cli.command, cfg.mode) {
        (Command::Decompose, Mode::Exact) => commands::decompose::<Q>(&cfg, &ov, &out)?,
        (Command::Decompose, Mode::Float) => commands::decompose::<f64>(&cfg, &ov, &out)?,
        (Command::Verify, Mode::Exact) => commands::verify::<Q>(&cfg, &ov, &out)?,
        (Command::Verify, Mode::Float) => commands::verify::<f64>(&cfg, &ov, &out)?,
        (Command::Audit, Mode::Exact) => commands::audit::<Q>(&cfg, &ov, &out)?,
        (Command::Audit, Mode::Float) => commands::audit::<f64>(&cfg, &ov, &out)?,
        (Command::Moments, Mode::Exact) => commands::moments::<Q>(&cfg, &ov, &out)?,
        (Command::Moments, Mode::Float) => commands::moments::<f64>(&cfg, &ov, &out)?,
    };
    // Run-specific facts live apart from the reproducible reports.
    out.json(
        "metadata.json",
        &json!({
            "command": format!("{:?}", cli.command).to_lowercase(),
            "config": cli.config.as_ref().map(|p| p.display().to_string()),
            "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
            "started_unix": started,
            "elapsed_seconds": clock.elapsed().as_secs_f64(),
            "version": env!("CARGO_PKG_VERSION"),
            "exit_code": code,
        }),
    )?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            // Broken internal invariants count as failed checks; everything
            // else is a usage or configuration problem.
            let invariant = e
                .downcast_ref::<stationize_core::Error>()
                .is_some_and(|x| matches!(x, stationize_core::Error::Invariant(_)));
            ExitCode::from(if invariant { 1 } else { 2 })
        }
    }
}
