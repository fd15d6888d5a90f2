//! `npw` — construct and verify the metric splitting of wave-type
//! spacetimes from a JSON run configuration.
//!
//! Exit status: 0 when every (non-flagged) check passes, 1 on a failed
//! numerical check or runtime failure, 2 on a configuration/schema
//! error.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::RunError;
use config::RunConfig;
use output::Check;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "npw", version, about = "Metric splitting of wave-type spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the net epsilon list (comma separated, decreasing).
    #[arg(long, global = true, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Metric identities at random points: eigenvalues, determinant,
    /// temporal function, pullback residual.
    Verify,
    /// Evaluate theta and the slice metric on a grid.
    Split,
    /// Integrate one geodesic and record its conserved monitors.
    Geodesic,
    /// Certify unique crossings of random null geodesics.
    Cauchy,
    /// Sweep a net quantity across epsilons against its limit.
    Converge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let Some(config_path) = cli.config.as_ref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let raw = match std::fs::read_to_string(config_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match RunConfig::parse(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let seed = cli.seed.unwrap_or(cfg.seed);
    let hash = output::config_hash(&raw, seed, cli.epsilons.as_deref());

    let result = match cli.command {
        Command::Verify => commands::run_verify(&cfg, &cli.out, seed),
        Command::Split => commands::run_split(&cfg, &cli.out),
        Command::Geodesic => commands::run_geodesic(&cfg, &cli.out),
        Command::Cauchy => commands::run_cauchy(&cfg, &cli.out, seed),
        Command::Converge => commands::run_converge(&cfg, &cli.out, cli.epsilons.as_deref()),
    };

    let checks: Vec<Check> = match result {
        Ok(checks) => checks,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(RunError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            let checks = vec![Check::new(format!("run: {msg}"), false, f64::NAN, f64::NAN)];
            let _ = output::write_summary(&cli.out, &hash, &checks);
            return ExitCode::from(1);
        }
    };

    if let Err(e) = output::write_summary(&cli.out, &hash, &checks) {
        eprintln!("error: cannot write summary: {e}");
        return ExitCode::from(1);
    }

    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.pass {
            "pass"
        } else if c.is_flagged() {
            "flagged"
        } else {
            failed.push(c.name.clone());
            "FAIL"
        };
        println!(
            "{status:>7}  {}  value {}  tolerance {}",
            c.name,
            output::fmt17(c.value),
            output::fmt17(c.tolerance)
        );
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        ExitCode::from(1)
    }
}
