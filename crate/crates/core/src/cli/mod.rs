//! Command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 validation failure,
//! 3 resource cap exceeded. `RANDUAL_THREADS` sets the worker count.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

pub use args::{Cli, Command};
pub use output::{fmt_f64, RunManifest};

use crate::Error;

/// Largest unitary dimension accepted without `--force`.
pub const MAX_UNITARY_DIM: usize = 8192;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ResourceCap(_) => EXIT_RESOURCE,
            Error::Config(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooSmall { .. }
            | Error::InvalidSubsystems(_)
            | Error::InsufficientSamples { .. } => EXIT_CONFIG,
            Error::NotHermitian(_)
            | Error::NotPositive(_)
            | Error::NotRankOneProjector(_)
            | Error::NoConvergence
            | Error::InvalidChannel(_)
            | Error::WrongVariant { .. } => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Refuses dense work above the caps unless forced.
pub fn check_dim(dim: usize, force: bool) -> Result<(), CliError> {
    if dim > MAX_UNITARY_DIM && !force {
        return Err(CliError {
            code: EXIT_RESOURCE,
            message: format!(
                "dimension {dim} exceeds {MAX_UNITARY_DIM}; each dense matrix needs about {} MiB (pass --force to run anyway)",
                crate::spinchain::memory_mib(dim)
            ),
        });
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("RANDUAL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("RANDUAL_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::config("RANDUAL_THREADS must be positive"));
        }
        // A second call in the same process keeps the first pool, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::ChannelInspect(a) => commands::channel_inspect(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::DualDistance(a) => commands::dual_distance(a),
        Command::Otoc(a) => commands::otoc(a),
        Command::Thermalize(a) => commands::thermalize(a),
        Command::Scaling(a) => commands::scaling(a),
    }
}

/// Parses arguments, runs, and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
