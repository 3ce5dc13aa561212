use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use schur_lab_cli::{run, write_atomic, CliError, Command, Expect, ExperimentConfig, Format, RunOptions};

/// Numerical experiments on idempotent Schur multipliers.
#[derive(Debug, Parser)]
#[command(name = "schur-lab", version)]
struct Args {
    /// Command to run; may instead be given as "command" in the config.
    command: Option<Command>,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 2 when the outcome differs.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
}

fn main_inner(args: Args) -> Result<i32, CliError> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = run(&RunOptions {
        command: args.command,
        config,
        out: args.out,
        format: args.format,
        seed: args.seed,
        jobs: args.jobs,
        expect: args.expect,
    })?;
    match &out.out {
        Some(path) => {
            write_atomic(path, out.text.as_bytes())?;
            eprintln!("{}: {:?} -> {}", out.command, out.outcome, path.display());
        }
        None => print!("{}", out.text),
    }
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match main_inner(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
