//! `spectralforge` — spectra of point-interaction Schrödinger chains and
//! inverse synthesis of interaction strengths.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use spectralforge::commands::{
    cmd_probe, cmd_solve, cmd_sweep, cmd_synthesize, cmd_verify, CliError, OutputFormat,
};

#[derive(Parser)]
#[command(name = "spectralforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (also settable via SPECTRALFORGE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed; reserved so that runs stay reproducible when sampling is
    /// involved. Current commands are fully deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the eigenvalues of an operator inside a window.
    Solve {
        /// Operator JSON document.
        #[arg(long)]
        input: PathBuf,
        /// Report destination.
        #[arg(long)]
        output: PathBuf,
        /// Window as "lo,hi"; lo may be "-inf".
        #[arg(long)]
        window: String,
        /// Absolute eigenvalue tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Output format: json or csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Synthesize an operator whose window spectrum matches a target.
    Synthesize {
        /// Target JSON document.
        #[arg(long)]
        input: PathBuf,
        /// Tuning-result destination; the operator goes to the same path
        /// with extension "operator.json".
        #[arg(long)]
        output: PathBuf,
        /// Truncation level.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Tuning tolerance on |located - target|.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Decoupled generator cells beyond the coupled block (default: n).
        #[arg(long)]
        tail: Option<usize>,
    },
    /// Re-solve an operator with the finite-difference oracle and compare
    /// against a report.
    Verify {
        /// Operator JSON document.
        #[arg(long)]
        input: PathBuf,
        /// Report to check.
        #[arg(long)]
        report: PathBuf,
        /// Verdict destination.
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample secular value and eigenvalue count on a λ grid (CSV plot data).
    Sweep {
        /// Operator JSON document.
        #[arg(long)]
        input: PathBuf,
        /// CSV destination.
        #[arg(long)]
        output: PathBuf,
        /// Window as "lo,hi" (finite).
        #[arg(long)]
        window: String,
        /// Number of grid points.
        #[arg(long, default_value_t = 500)]
        grid: usize,
    },
    /// Run the synthesis at several truncation levels and tabulate strength
    /// drifts (CSV).
    Probe {
        /// Target JSON document.
        #[arg(long)]
        input: PathBuf,
        /// CSV destination.
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated truncation levels, e.g. "2,4,8".
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Tuning tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let err = || CliError::parse(format!("window must be \"lo,hi\", got {s:?}"));
    let (lo, hi) = s.split_once(',').ok_or_else(err)?;
    let lo = match lo.trim() {
        "-inf" => f64::NEG_INFINITY,
        v => v.parse().map_err(|_| err())?,
    };
    let hi = hi.trim().parse().map_err(|_| err())?;
    Ok((lo, hi))
}

fn parse_format(s: &str) -> Result<OutputFormat, CliError> {
    match s {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        _ => Err(CliError::parse(format!("format must be json or csv, got {s:?}"))),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("SPECTRALFORGE_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                CliError::parse(format!("SPECTRALFORGE_THREADS must be an integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::parse("thread count must be positive"));
        }
        // Ignore the error from configuring twice (tests call this in-process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Solve { input, output, window, tol, format } => {
            let window = parse_window(&window)?;
            let format = parse_format(&format)?;
            cmd_solve(&input, &output, window, tol, format).map(drop)
        }
        Command::Synthesize { input, output, n, tol, tail } => {
            cmd_synthesize(&input, &output, n, tol, tail).map(drop)
        }
        Command::Verify { input, report, output } => {
            cmd_verify(&input, &report, &output).map(drop)
        }
        Command::Sweep { input, output, window, grid } => {
            let window = parse_window(&window)?;
            cmd_sweep(&input, &output, window, grid)
        }
        Command::Probe { input, output, n, tol } => cmd_probe(&input, &output, &n, tol),
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    error: &'a CliError,
    #[serde(rename = "exitCode")]
    exit_code: i32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = Diagnostics { error: &e, exit_code: e.code };
            eprintln!("{}", serde_json::to_string(&diag).expect("diagnostics serialize"));
            ExitCode::from(e.code as u8)
        }
    }
}
