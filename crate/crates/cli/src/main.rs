//! `qcluster` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qcluster", version, about = "Quasi-cluster algebras of marked surfaces")]
pub struct Cli {
    /// Seed for every random choice; recorded in the output header.
    #[arg(long = "rng-seed", visible_alias = "seed", global = true, default_value_t = 0)]
    pub rng_seed: u64,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Dot,
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exact rational arithmetic.
    Numeric,
    /// Double precision, compared at 1e-9 relative.
    Float,
    /// Laurent polynomials in the staircase generators.
    Symbolic,
}

#[derive(Args, Debug, Clone)]
pub struct SurfaceArgs {
    /// Preset: disc:b, moebius:n or annulus:p,q.
    #[arg(long, conflicts_with = "surface_json", required_unless_present = "surface_json")]
    pub surface: Option<String>,
    /// Surface signature as JSON.
    #[arg(long)]
    pub surface_json: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the quasi-exchange graph.
    Explore {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Restrict to ordinary triangulations (no one-sided curves).
        #[arg(long)]
        arcs_only: bool,
        /// Seed budget (default 100000, or 60 on surfaces of infinite type).
        #[arg(long)]
        max_seeds: Option<usize>,
    },
    /// Expand every variable in one quasi-cluster.
    Variables {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Comma-separated names of the target cluster (default: the initial one).
        #[arg(long)]
        target: Option<String>,
    },
    /// Follow a sequence of quasi-mutations.
    Flip {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Comma-separated element names.
        #[arg(long)]
        seq: String,
        /// Cluster to start from; variables are expanded in it (default: the initial one).
        #[arg(long)]
        start: Option<String>,
    },
    /// Orientation double cover checks.
    Cover {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Random mutation paths walked on the cover.
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, default_value_t = 8)]
        path_len: usize,
        /// Random instances of the matrix exchange rule.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Friezes and SL2-tilings from a zig-zag staircase.
    Frieze {
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        epsilon: i64,
        /// Window side length.
        #[arg(long, default_value_t = 10)]
        size: usize,
        #[arg(long, value_enum, default_value_t = Mode::Numeric)]
        mode: Mode,
        /// Largest k for the closed formula check (default 6, or 4 in symbolic mode).
        #[arg(long)]
        k_max: Option<u32>,
        /// Generic boundary values instead of the coefficient-free specialization.
        #[arg(long)]
        generic_boundary: bool,
        /// Comma-separated positive integers for the staircase (upper row then lower row).
        #[arg(long)]
        staircase: Option<String>,
        /// Emit the AR quiver of the window (with --format dot).
        #[arg(long)]
        ar: bool,
    },
    /// Randomized lambda-length identity suites.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Run only the named suites.
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Finite-type verdict and closed-form counts.
    Classify {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    /// Linear independence of quasi-cluster monomials at random points.
    Basis {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long, default_value_t = 3)]
        oversample: usize,
        /// Append a copy of a column; the check must then report rank deficiency.
        #[arg(long)]
        inject_duplicate: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
