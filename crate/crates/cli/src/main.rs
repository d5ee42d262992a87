mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonArgs;

#[derive(Debug, Parser)]
#[command(name = "ordcurv", version, about = "Nonlocal curvature, fiber checks and moving-plane symmetry for voxel sets")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Curvature at boundary-cell centers or at listed points, as CSV.
    Curvature {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV of query points (one coordinate per column, optional header).
        #[arg(long)]
        points: Option<PathBuf>,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Heatmap PGM over the whole grid (planar sets); a JSON sidecar is
        /// written next to it.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Nonlocal perimeter.
    Perimeter {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fiber decomposition and P1-P4 boundary classification, as CSV.
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Append the curvature at each record (needs a kernel).
        #[arg(long)]
        with_curvature: bool,
    },
    /// Ordered-curvature, domain and nondegeneracy checks.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Ordered-curvature tolerance (default 4 C_Lip h).
        #[arg(long)]
        order_tol: Option<f64>,
        /// Random boundary pairs for the nondegeneracy quotient.
        #[arg(long, default_value_t = 64)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Moving-plane sweep along the last axis.
    Symmetry {
        #[command(flatten)]
        common: CommonArgs,
        /// Symmetry-defect tolerance (default 2 boundary cells / occupied cells).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Verification suites on one input, or the verification matrix.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Run a verification matrix instead: the built-in one, or one read
        /// from the given JSON file.
        #[arg(long, num_args = 0..=1, default_missing_value = "standard")]
        matrix: Option<String>,
        /// Resolutions for the symmetry suite (default h and h/2).
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        /// Translation steps in cells (default 1,2,4 up to r/4).
        #[arg(long, value_delimiter = ',')]
        t_cells: Option<Vec<i64>>,
        /// Analytic symmetry plane, when it cannot be derived from the shape.
        #[arg(long)]
        expected_plane: Option<f64>,
    },
    /// Writes the reference corpus as ShapeSpec JSON files.
    Corpus {
        #[arg(long, short = 'o', default_value = "corpus")]
        out: PathBuf,
    },
}

/// Usage or input error; reported on stderr with exit code 2.
#[derive(Debug)]
pub struct Failure(String);

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure(msg.into())
    }
}

impl From<ordcurv::Error> for Failure {
    fn from(e: ordcurv::Error) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
