mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssm_core::SsmError;

use commands::Outcome;

/// Invariant manifolds, backbone curves and forced response curves in physical coordinates.
///
/// Every configuration field can be overridden by a flag of the same dotted name,
/// e.g. `--order 5 --master.indices [3,4] --forcing.omega_min 0.54`.
#[derive(Parser)]
#[command(name = "ssm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the model's matrices and tensors in manifest form.
    Model(RunArgs),
    /// Compute the manifold and reduced dynamics.
    Ssm(RunArgs),
    /// Forced response curve of a two-dimensional master subspace.
    Frc(RunArgs),
    /// Backbone curve of a conservative master mode.
    Backbone(RunArgs),
    /// Invariance-residual convergence check.
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted configuration overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn exit_code(e: &SsmError) -> u8 {
    match e {
        SsmError::Numerical(_) => 3,
        SsmError::OuterResonance { .. } => 4,
        SsmError::Validation(_) | SsmError::Unsupported(_) | SsmError::Capacity(_) | SsmError::Parse { .. } | SsmError::Io { .. } => 2,
    }
}

/// Pulls `--config` and `--threads` out of the override list when they follow an override.
fn split_known(args: &mut RunArgs) -> Result<(), SsmError> {
    let mut rest = Vec::new();
    let mut it = std::mem::take(&mut args.overrides).into_iter();
    while let Some(a) = it.next() {
        let (key, inline) = match a.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (a.clone(), None),
        };
        if key == "--config" || key == "--threads" {
            let v = inline
                .or_else(|| it.next())
                .ok_or_else(|| SsmError::Validation(format!("option '{key}' needs a value")))?;
            if key == "--config" {
                args.config = Some(PathBuf::from(v));
            } else {
                args.threads = Some(v.parse().map_err(|_| SsmError::Validation(format!("invalid thread count '{v}'")))?);
            }
        } else {
            rest.push(a);
        }
    }
    args.overrides = rest;
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, SsmError> {
    let (mut args, cmd): (RunArgs, fn(&config::RunConfig) -> ssm_core::Result<Outcome>) = match cli.command {
        Command::Model(a) => (a, commands::model),
        Command::Ssm(a) => (a, commands::ssm),
        Command::Frc(a) => (a, commands::frc),
        Command::Backbone(a) => (a, commands::backbone),
        Command::Verify(a) => (a, commands::verify),
    };
    split_known(&mut args)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(SsmError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SsmError::Validation(format!("thread pool: {e}")))?;
    }
    let overrides = config::parse_overrides(&args.overrides)?;
    let cfg = config::resolve(args.config.as_deref(), &overrides)?;
    cmd(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
