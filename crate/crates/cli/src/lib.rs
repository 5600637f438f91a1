//! The `diskpca` command-line tool: data loading, configuration and one
//! subcommand per experiment.

pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{Config, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

#[derive(Parser, Debug)]
#[command(name = "diskpca", version, about = "Distributed kernel PCA over a simulated cluster")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run disKPCA once.
    Kpca(Overrides),
    /// Uniform sampling followed by the distributed low-rank step.
    BaselineDislr(Overrides),
    /// Uniform sampling followed by batch KPCA at the master.
    BaselineBatch(Overrides),
    /// Error and communication over a range of n_adapt values.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// `diskpca`, `uniform-dislr` or `uniform-batch`.
        #[arg(long, default_value = "diskpca")]
        method: String,
    },
    /// Sweep all three methods on the same cluster.
    Compare(Overrides),
    /// disKPCA features followed by k-means with k clusters.
    Cluster(Overrides),
    /// Write a synthetic dataset.
    Gen {
        #[command(flatten)]
        overrides: Overrides,
        /// `clustered` or `low-rank-plus-noise`.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k_true: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Destination file; `.csv` writes dense CSV.
        #[arg(long)]
        to: std::path::PathBuf,
    },
    /// Per-point leverage scores and the sampled representatives.
    LeverageDebug(Overrides),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn core_code(e: &diskpca_core::Error) -> i32 {
    use diskpca_core::Error as E;
    match e {
        E::Round { source, .. } => core_code(source),
        E::Parse { .. } | E::Io(_) | E::Empty(_) | E::DimensionMismatch { .. } => EXIT_DATA,
        E::InvalidArgument(_) | E::Json(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Maps a failure to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Data(_) => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<diskpca_core::Error>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_NUMERICAL
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
