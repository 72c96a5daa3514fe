use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use slowsde::cli::{self, Format};
use slowsde::config::Config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Experiments and reports for the slow-approximation SDE construction.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// One of: params, coeffs, alpha, bound, schedule, simulate, optimal-error, verify.
    command: String,
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides a `seed` key in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Extra key=value entries, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<bool> {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for kv in &args.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv:?}: expected KEY=VALUE"))?;
        cfg.set(k, v);
    }
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.get::<u64>("seed")?.unwrap_or(1),
    };
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out = cli::run(&args.command, &cfg, seed, format)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &out.text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{}", out.text),
    }
    Ok(out.passed)
}
