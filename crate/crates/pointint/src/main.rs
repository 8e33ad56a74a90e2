use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pointint::cli::{run, CliOptions};

/// Point-interaction Schrödinger toolkit: spectral audits, form-identity
/// audits, resolvent audits, trajectory evolutions, convergence studies.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Path to the flat JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for report.json and auxiliary files.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,

    /// Suppresses per-check console output.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !args.quiet {
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    }
    let code = run(&CliOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
        quiet: args.quiet,
    });
    ExitCode::from(code as u8)
}
