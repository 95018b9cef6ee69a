//! `naegs` — command-line driver for the random regular k-NAE-SAT
//! ground-state toolkit: instance generation and exact solving, survey
//! propagation, the 1RSB energy curve, first-moment bounds, the Gardner
//! stability scan, and the 2RSB perturbation test.
//!
//! Exit codes: 0 success, 1 verification/check failure, 2 invalid input,
//! 3 numerical non-convergence, 4 resource cap exceeded.

mod cmds;
mod out;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmds::Ctx;

#[derive(Parser)]
#[command(name = "naegs", version, about, disable_help_subcommand = true)]
struct Cli {
    /// RNG seed; identical seeds give bit-identical results.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads for parallel scans (default: all cores). Results are
    /// independent of this setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Iterative-solver tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write CSV output to this file (table-producing subcommands).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Emit JSON instead of CSV for table-producing subcommands.
    #[arg(long, global = true)]
    json: bool,

    /// Omit the timestamp from the provenance header, making output
    /// byte-identical across runs.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random d-regular k-NAE-SAT instance (configuration model).
    Gen {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    /// Exact ground state of an instance file by Gray-code enumeration.
    Solve {
        /// Instance JSON file (a `gen` output).
        #[arg(long = "in")]
        input: PathBuf,
        /// Maximum variable count admitted for exhaustive enumeration.
        #[arg(long, default_value_t = 30)]
        cap: usize,
    },
    /// Monte Carlo over instances: exact e_min summary statistics.
    Mc {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 30)]
        cap: usize,
    },
    /// Check the tree ground-state formula against brute force on random
    /// boundary trees (or on one tree file).
    TreeCheck {
        /// Boundary-tree JSON file; omit to generate random trees.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        max_nodes: usize,
    },
    /// Solve the survey-propagation fixed point at one (k, alpha, y).
    Sp {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 0.7)]
        damping: f64,
    },
    /// 1RSB ground-state energy curve over a grid of normalized densities.
    EnergyCurve {
        #[arg(long)]
        k: usize,
        /// Density grid as lo:hi:n (n evenly spaced c values).
        #[arg(long)]
        c_grid: String,
    },
    /// First-moment lower bound vs the 1RSB value at one density.
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Gardner stability scan: the branching indicator Đ·λ over densities.
    Gardner {
        #[arg(long)]
        k: usize,
        /// Alpha grid as lo:hi:n; default is a log-spaced 16-point scan.
        #[arg(long)]
        alpha_grid: Option<String>,
        /// Report α_Ga (the largest Đ·λ = 1 crossing) instead of the table.
        #[arg(long)]
        find_threshold: bool,
    },
    /// 2RSB perturbation at one point: expansion vs (optionally) the
    /// directly evaluated functional.
    Perturb {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 1e-3)]
        zeta: f64,
        /// Also evaluate the 2RSB functional by direct nested summation
        /// (integer d with d(k−1) small enough to enumerate).
        #[arg(long)]
        direct: bool,
    },
    /// Joint threshold comparison: ΔΦ sign flip vs the Đ·λ = 1 crossing.
    Instability {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-6)]
        zeta: f64,
    },
    /// Run the exact-identity and oracle suite across all modules.
    Verify {
        /// Only run checks whose module name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Test hook: corrupt the S-table to demonstrate failure reporting.
        #[arg(long, hide = true)]
        corrupt_s: bool,
    },
}

fn dispatch(cli: &Cli) -> naegs_core::Result<i32> {
    let ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
        out: cli.out.as_deref(),
        csv: cli.csv.as_deref(),
        json: cli.json,
        no_timestamp: cli.no_timestamp,
    };
    match &cli.cmd {
        Cmd::Gen { k, d, n } => cmds::gen(&ctx, *k, *d, *n),
        Cmd::Solve { input, cap } => cmds::solve(&ctx, input, *cap),
        Cmd::Mc {
            k,
            d,
            n,
            trials,
            cap,
        } => cmds::mc(&ctx, *k, *d, *n, *trials, *cap),
        Cmd::TreeCheck {
            input,
            trials,
            k,
            max_nodes,
        } => cmds::tree_check(&ctx, input.as_deref(), *trials, *k, *max_nodes),
        Cmd::Sp { k, alpha, y, damping } => cmds::sp_cmd(&ctx, *k, *alpha, *y, *damping),
        Cmd::EnergyCurve { k, c_grid } => cmds::energy_curve(&ctx, *k, c_grid),
        Cmd::Bounds { k, alpha, c } => cmds::bounds(&ctx, *k, *alpha, *c),
        Cmd::Gardner {
            k,
            alpha_grid,
            find_threshold,
        } => cmds::gardner_cmd(&ctx, *k, alpha_grid.as_deref(), *find_threshold),
        Cmd::Perturb { k, d, y, zeta, direct } => cmds::perturb(&ctx, *k, *d, *y, *zeta, *direct),
        Cmd::Instability { k, zeta } => cmds::instability(&ctx, *k, *zeta),
        Cmd::Verify { filter, corrupt_s } => Ok(verify::run(&verify::VerifyCfg {
            filter: filter.clone(),
            corrupt_s: *corrupt_s,
        })),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
