//! `hbspace`: experiments and invariant checks for the spaces `H[B]`.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hbspace::suite::DEFAULT_SEED;
use hbspace::Error;

#[derive(Parser)]
#[command(name = "hbspace", version, about = "Numerics for the spaces H[B] on the unit disk")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
pub struct Global {
    /// Space definition (JSON).
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "named")]
    pub space: Option<PathBuf>,
    /// Built-in space: h2, rank1-half, binomial-half, inner-z, dirichlet-pair.
    #[arg(long, global = true, value_name = "NAME")]
    pub named: Option<String>,
    /// Directory for CSV, SVG and JSON outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Reduced schedules (k_max = 8).
    #[arg(long, global = true)]
    pub quick: bool,
    /// Print a JSON document instead of the human summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Boundary grid size N; the Taylor degree is N/4.
    #[arg(long, global = true, default_value_t = 4096)]
    pub grid: usize,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    pub no_plots: bool,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Kernel values k(z, λ) on point lists (seeded random points by default).
    Kernel {
        /// Points z, each RE or RE:IM; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
        /// Points λ, each RE or RE:IM; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Vec<String>,
        /// Number of random points when a list is omitted.
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
    /// Model embedding f -> (f, f₁).
    Embed {
        /// Function: coeffs:c0,c1,..., monomial:K, szego:A or kernel:A.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 16)]
        terms: usize,
    },
    /// Norm of f in H[B].
    Norm {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
    },
    /// Norm through the backward-shift integral along r = 1 - 2^-k.
    NormFormula {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 4)]
        k_min: u32,
        /// Defaults to 10 (8 with --quick).
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Reverse Carleson densities and integrals.
    Carleson {
        #[arg(long, default_value_t = 4)]
        k_min: u32,
        /// Defaults to 12 (8 with --quick).
        #[arg(long)]
        k_max: Option<u32>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Whether multiplication by z maps H[B] into itself.
    MzTest,
    /// Distance from f to polynomials of each degree.
    PolyDensity {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = 24)]
        max_degree: usize,
    },
    /// Outer factor A of I - B*B.
    Factor {
        #[arg(long, default_value_t = 16)]
        terms: usize,
    },
    /// Numerical rank of I - LL* from the monomial Gram matrix.
    Rank {
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Cauchy dual of a weighted space (Bergman weights by default).
    Dual {
        /// Comma separated weights w_0 = 1, w_1, ...
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Invariant checks on the configured space.
    Verify,
    /// All acceptance criteria.
    Suite,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) => 1,
        Error::NotMzInvariant => 2,
        e if e.is_config() => 2,
        _ => 3,
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HBSPACE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("HBSPACE_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(&cli.cmd, &cli.global) {
        Ok(o) => {
            if cli.global.json {
                println!("{}", serde_json::to_string_pretty(&o.json).expect("json"));
            } else {
                println!("{}", o.human);
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
