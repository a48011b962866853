//! The `riesz-trace` command-line driver.
//!
//! Every subcommand accepts the same flags; each one reads what it needs.
//! Values may also come from a `key = value` file given with `--config`, in
//! which case flags take precedence.
//!
//! Exit codes: 0 when every hard invariant holds, 1 when one fails (reports
//! are still written), 2 for configuration or input errors.

mod commands;
mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, MeshSource, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "riesz-trace",
    version,
    about = "Riesz bases for L2 boundary data on triangulated polygons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the bases on one mesh, verify them and write all artifacts.
    Run(Flags),
    /// Run the pipeline on several refinement levels and report drift.
    Sweep(Flags),
    /// Check the Moore-Penrose identity suite on seeded random operators.
    VerifyMp(Flags),
    /// Generate a structured mesh or inspect a mesh file.
    Mesh(Flags),
}

/// Raw flag values; `None` means "not given on the command line".
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// `key = value` file with defaults for any of the other flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in domain: unit-square or l-shape.
    #[arg(long)]
    pub domain: Option<String>,
    /// Mesh file to load instead of a built-in domain.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Cells per unit length of the structured mesh.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated refinement levels for `sweep`.
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative singular value cut-off of the pseudo-inverse.
    #[arg(long = "rank-tol")]
    pub rank_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of expansion terms in the exported solution (default: all).
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Random samples per check (random data for `run`, operators for `verify-mp`).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated smoothness indices in [0, 1] at which the step-datum
    /// solution's spectral norms are reported.
    #[arg(long = "s-values", value_delimiter = ',')]
    pub s_values: Option<Vec<f64>>,
    /// Also write the step-datum solution as solution.csv.
    #[arg(long = "export-solution")]
    pub export_solution: bool,
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (flags, kind) = match cli.command {
        Command::Run(f) => (f, config::Kind::Run),
        Command::Sweep(f) => (f, config::Kind::Sweep),
        Command::VerifyMp(f) => (f, config::Kind::VerifyMp),
        Command::Mesh(f) => (f, config::Kind::Mesh),
    };
    let cfg = match RunConfig::resolve(&flags, kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("riesz-trace: {e}");
            return 2;
        }
    };
    match kind {
        config::Kind::Run => commands::run(&cfg),
        config::Kind::Sweep => commands::sweep(&cfg),
        config::Kind::VerifyMp => commands::verify_mp(&cfg),
        config::Kind::Mesh => commands::mesh(&cfg),
    }
}
