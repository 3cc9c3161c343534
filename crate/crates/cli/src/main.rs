mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use schottky_lab::schottky::DEFAULT_BUDGET;

#[derive(Parser, Debug)]
#[command(name = "schottky-lab", version, about = "Schottky limit sets, Patterson-Sullivan measures and decay scans")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command.
#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Common {
    /// Shipped group name (symmetric_r2, asymmetric_r2, r3) or a config JSON path.
    #[arg(long, visible_alias = "config", global = true, default_value = "symmetric_r2")]
    pub group: String,
    /// Output directory; SCHOTTKY_LAB_OUT takes precedence.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on enumerated partition nodes.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Estimate δ in-process instead of reading the delta report.
    #[arg(long, global = true)]
    pub recompute: bool,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct XiGrid {
    #[arg(long, default_value_t = 10.0)]
    pub xi_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub xi_max: f64,
    #[arg(long, default_value_t = 31)]
    pub xi_points: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct HGrid {
    #[arg(long, default_value_t = 1e-3)]
    pub h_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub h_max: f64,
    #[arg(long, default_value_t = 7)]
    pub h_points: usize,
}

#[derive(Subcommand, Debug, Clone, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the Schottky axioms; exit 1 if any fails.
    Validate,
    /// Dump Z(τ) as CSV (word, lo, hi, size).
    Partition {
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
    },
    /// Re-check a partition CSV against the group.
    VerifyPartition {
        /// Partition CSV; defaults to partition.csv in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
    },
    /// Bowen-equation estimate of δ with the Poincaré-series oracle.
    Delta {
        #[arg(long, default_value_t = 1e-2)]
        tau: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Word length of the Poincaré partial sums (default 12 for r = 2, 9 otherwise).
        #[arg(long)]
        oracle_len: Option<usize>,
    },
    /// Patterson-Sullivan atoms at resolution τ plus regularity bands.
    Measure {
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// |μ̂(ξ)| scan with a windowed power-law fit.
    Fourier {
        #[command(flatten)]
        grid: XiGrid,
        /// Measure resolution; defaults to the finest the grid needs.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Exponential sums over ζ values of a sampled sequence, on the J_τ window.
    Expsum {
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Also report the regular-sequence fraction for this ε₂.
        #[arg(long)]
        epsilon2: Option<f64>,
        #[arg(long, default_value_t = 31)]
        xi_points: usize,
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
    },
    /// ‖B(h)‖ on the discretized measure with the hyperbolic phase.
    Fup {
        #[command(flatten)]
        grid: HGrid,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// ‖1_Λ(h^ρ) B(h) 1_Λ(h^ρ)‖ on Lebesgue quadrature grids.
    LebesgueFup {
        #[command(flatten)]
        grid: HGrid,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Collect the JSON reports present in the output directory.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut common = cli.common;
    if let Some(dir) = std::env::var_os("SCHOTTKY_LAB_OUT") {
        common.out = PathBuf::from(dir);
    }
    let run = || commands::run(&cli.command, &common);
    let result = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(commands::Failure::Usage(e.to_string())),
        },
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("schottky-lab: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
