//! Command-line front end: argument parsing, config merging, dispatch and
//! report output. The binary is a thin wrapper around [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;
use concentra::harness::{default_grid, validate_grid, MonteCarlo, Table};
use concentra::{Error, Result};
use serde_json::json;

pub mod bound;
pub mod config;
pub mod instance;
pub mod opts;
pub mod pvalue;
pub mod simulate;
pub mod validate;

use opts::{Cli, Command, Format, GridArgs, McArgs, OutputArgs};

/// A finished command: the report plus anything that should change the
/// exit status or be echoed on stderr.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    pub threads: usize,
}

impl Outcome {
    pub fn new(table: Table) -> Self {
        Self { table, violations: Vec::new(), warnings: Vec::new(), threads: 1 }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Unsupported(_) => EXIT_USAGE,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
    }
}

pub(crate) fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

/// Explicit thresholds, or an evenly spaced grid ending at `--max-threshold`
/// (default `default_upper`).
pub fn threshold_grid(grid: &GridArgs, default_upper: f64) -> Result<Vec<f64>> {
    if !grid.thresholds.is_empty() {
        validate_grid(&grid.thresholds)?;
        return Ok(grid.thresholds.clone());
    }
    default_grid(grid.max_threshold.unwrap_or(default_upper), grid.grid_points)
}

pub fn monte_carlo(seed: Option<u64>, samples: u64, threads: usize) -> Result<MonteCarlo> {
    let Some(seed) = seed else {
        return bad("--seed is required for sampled runs");
    };
    if threads == 0 {
        return bad("--threads must be at least 1");
    }
    Ok(MonteCarlo::new(seed, samples)?.with_threads(threads))
}

pub(crate) fn mc_from(args: &McArgs) -> Result<MonteCarlo> {
    monte_carlo(args.seed, args.samples, args.threads)
}

fn dispatch(command: Command) -> (OutputArgs, Result<Outcome>) {
    match command {
        Command::Bound { family } => bound::run(family),
        Command::Validate { family } => validate::run(family),
        Command::Test { family } => pvalue::run(family),
        Command::Simulate { family } => simulate::run(family),
    }
}

pub fn render(outcome: &Outcome, format: Format, wall_time: f64) -> String {
    match format {
        Format::Csv => outcome.table.to_csv(),
        Format::Json => {
            outcome.table.to_json(&[("wall_time_seconds", json!(wall_time)), ("threads", json!(outcome.threads))])
        }
    }
}

fn write_report(out: &OutputArgs, text: &str) -> std::io::Result<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let (out, result) = dispatch(cli.command);
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = render(&outcome, out.format, started.elapsed().as_secs_f64());
    if let Err(e) = write_report(&out, &text) {
        eprintln!("error: cannot write report: {e}");
        return EXIT_USAGE;
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.violations.is_empty() {
        EXIT_OK
    } else {
        for v in &outcome.violations {
            eprintln!("violation: {v}");
        }
        EXIT_VIOLATION
    }
}
