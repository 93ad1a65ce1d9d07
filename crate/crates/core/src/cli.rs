//! Command-line front end.
//!
//! Exit codes: `0` success, `1` usage, config or I/O error, `2` run refused
//! because preparation and setting choice are not space-like separated.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    analyze_report, bound_report, cmd_analyze, cmd_bound, cmd_exact, cmd_optimize, cmd_run,
    exact_report, execute_run, optimize_report, RunOutput, RunReport, SCHEMA_VERSION,
};
pub use config::{AnglesConfig, InitialStateConfig, RunConfig, WorldConfig};

use crate::analysis::{DEFAULT_GRID_STEP, DEFAULT_REFINE_TOLERANCE};
use crate::error::LgError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_FREEDOM_OF_CHOICE: i32 = 2;

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_BOUND_SEED: u64 = 42;
pub const DEFAULT_MIXTURES: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "lgsim",
    version,
    about = "Sequential-measurement Leggett-Garg simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a configured experiment and write the trial log and report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        trials: PathBuf,
    },
    /// Print the exact quantum correlations and left-hand side.
    Exact {
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        theta_ab: f64,
        #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
        theta_bc: f64,
    },
    /// Enumerate deterministic strategies and check random mixtures.
    Bound {
        #[arg(long, default_value_t = DEFAULT_BOUND_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MIXTURES)]
        mixtures: u64,
    },
    /// Search the angle plane for the largest quantum violation.
    Optimize {
        #[arg(long, value_parser = parse_angle, default_value_t = DEFAULT_GRID_STEP)]
        grid_step: f64,
        #[arg(long, default_value_t = DEFAULT_REFINE_TOLERANCE)]
        tol: f64,
    },
    /// Re-analyze an existing trial log.
    Analyze {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        significance: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        stride: Option<u64>,
        /// Config the log was produced with; echoed into the report.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Accepts plain radians or multiples of pi: `0.5`, `pi`, `pi/6`, `2pi/3`, `3*pi/8`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let bad = || format!("`{s}` is not an angle (radians, or forms like pi/6, 2*pi/3)");
    let t = s.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v).ok_or_else(bad);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let (sign, num) = match num.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, num),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
    let k = if coeff.is_empty() {
        1.0
    } else {
        coeff.parse::<f64>().map_err(|_| bad())?
    };
    let v = sign * k * std::f64::consts::PI / den;
    v.is_finite().then_some(v).ok_or_else(bad)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_FAILURE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            report,
            trials,
        } => cmd_run(&config, &report, &trials),
        Command::Exact { theta_ab, theta_bc } => cmd_exact(theta_ab, theta_bc, out),
        Command::Bound { seed, mixtures } => cmd_bound(seed, mixtures, out),
        Command::Optimize { grid_step, tol } => cmd_optimize(grid_step, tol, out),
        Command::Analyze {
            trials,
            significance,
            epsilon,
            stride,
            config,
        } => cmd_analyze(
            &trials,
            significance,
            epsilon,
            stride,
            config.as_deref(),
            out,
        ),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                LgError::FreedomOfChoice { .. } => EXIT_FREEDOM_OF_CHOICE,
                LgError::InvalidParameter { ref name, .. }
                    if name == "grid_step" || name == "tolerance" =>
                {
                    let _ = writeln!(err, "usage: lgsim optimize [--grid-step <rad>] [--tol <x>]  (0 < grid-step <= pi/64, tol > 0)");
                    EXIT_FAILURE
                }
                _ => EXIT_FAILURE,
            }
        }
    }
}
