mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crpoint::levi::ModelKind;

use crate::config::RunConfig;

/// Classification, canonical forms, certified homotopies, glued surfaces and
/// Levi-form checks for quadric germs `w = conj(z)ᵀAz + Re(zᵀBz)`.
///
/// JSON is read from `--input` (or stdin) and written to `--output` (or
/// stdout). Exit codes: 0 success, 1 certificate failed, 2 invalid input,
/// 3 numeric or genericity failure.
#[derive(Debug, Parser)]
#[command(name = "crpoint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a pair: `{"class": …, "det": …}`.
    Classify,
    /// Bishop invariants and reducing transform of an elliptic-normalizable pair.
    Bishop,
    /// Takagi factorization of a symmetric matrix (or of a pair's `B`).
    Takagi,
    /// Consimilarity canonical form of a matrix (or of a pair's `A`).
    Consim,
    /// Certified homotopy from a pair to a target.
    Homotopy {
        /// `normal-form`, or a file holding a pair of the same class.
        #[arg(long, default_value = "normal-form")]
        target: String,
    },
    /// Certify a path read as JSON.
    Certify,
    /// Complex points of a graph surface `{"pair"|"path_file": …, "epsilon": …}`.
    Surface,
    /// Levi-form reports at sampled points of a model field.
    Levi,
    /// Seeded random pairs with their classes.
    Corpus {
        /// Number of pairs.
        #[arg(long, default_value_t = 100)]
        count: u64,
    },
}

/// Options shared by every command; any of them may also be set in the
/// `--config` file as `key = value`.
#[derive(Debug, Args)]
pub struct Flags {
    /// Input JSON file [default: stdin].
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for every randomized step [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Certification margin and floor of the degenerate band [default: 1e-10].
    #[arg(long, global = true)]
    pub tol_abs: Option<f64>,
    /// Relative degenerate band `σ_min ≤ tol·σ_max` [default: 1e-9].
    #[arg(long, global = true)]
    pub tol_rel: Option<f64>,
    /// Samples per path segment, or Levi sample count (at least 101) [default: 2001].
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seeds per real axis for the complex-point search [default: 41 for n = 1, else 5].
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Gluing radius of the surface (overrides the input's `epsilon`).
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Search radius for complex points [default: 1.2·epsilon].
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Levi model: `all-squares` or `mixed` [default: all-squares].
    #[arg(long, global = true)]
    pub model: Option<ModelKind>,
    /// Dimension for `levi` [default: 2] and `corpus` [default: cycle 1..=4].
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.flags).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
