//! `ssc`: generate synthetic unions of subspaces, solve the self-expression
//! program, diagnose geometry, cluster, and run phase-transition grids.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input or spec,
//! 3 I/O failure, 4 solver hit its iteration cap (results still written).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ssc_core::solver::SolveMode;
use ssc_core::SscError;

#[derive(Parser)]
#[command(
    name = "ssc",
    version,
    about = "Noisy sparse subspace clustering toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Matrix,
    Column,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Matrix => SolveMode::Matrix,
            ModeArg::Column => SolveMode::Column,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a model spec (JSON).
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the self-expression program; writes C.csv and solve.json.
    Solve {
        #[arg(long)]
        data: PathBuf,
        /// Defaults to sqrt(n).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value = "matrix")]
        mode: ModeArg,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        /// Normalize data columns before solving.
        #[arg(long)]
        normalize: bool,
        /// Stop on ADMM residuals alone, without the optimality check.
        #[arg(long)]
        no_certify: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure inradius, incoherence, affinity and noise; evaluate every
    /// lambda range.
    Diagnose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// Defaults to sqrt(n).
        #[arg(long)]
        lambda: Option<f64>,
        /// Noise level for the fully random verdict; defaults to the root
        /// mean square noise norm when clean data is given.
        #[arg(long)]
        sigma: Option<f64>,
        /// Union-bound constant of the semi-random advisory.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Random directions per inradius estimate (d >= 3).
        #[arg(long, default_value_t = 20000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering of a coefficient matrix, scored against labels.
    Cluster {
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Number of clusters; defaults to the number of distinct labels.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ssc_core::solver::SUPPORT_EPS_REL)]
        support_eps: f64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a lambda x (sigma | d | L) grid; writes results.csv and timings.csv.
    Experiment {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Capped by SSC_THREADS when set.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the grid's seed count.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        keep_coefficients: bool,
        #[arg(long)]
        cluster: bool,
    },
}

pub(crate) enum Outcome {
    Done,
    IterationCap,
}

fn exit_code(e: &SscError) -> u8 {
    match e {
        SscError::Io { .. } => 3,
        SscError::CholeskyFailure | SscError::EigenFailure(_) | SscError::NonFinite(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { spec, seed, out } => commands::generate(&spec, seed, &out),
        Command::Solve {
            data,
            lambda,
            mode,
            max_iter,
            normalize,
            no_certify,
            out,
        } => commands::solve(
            &data,
            lambda,
            mode.into(),
            max_iter,
            normalize,
            !no_certify,
            &out,
        ),
        Command::Diagnose {
            data,
            clean,
            labels,
            ensemble,
            lambda,
            sigma,
            t,
            budget,
            seed,
            out,
        } => commands::diagnose(commands::DiagnoseArgs {
            data,
            clean,
            labels,
            ensemble,
            lambda,
            sigma,
            t,
            budget,
            seed,
            out,
        }),
        Command::Cluster {
            coefficients,
            labels,
            k,
            seed,
            support_eps,
            lambda,
            out,
        } => commands::cluster(&coefficients, &labels, k, seed, support_eps, lambda, &out),
        Command::Experiment {
            grid,
            out,
            workers,
            seeds,
            keep_coefficients,
            cluster,
        } => commands::experiment(&grid, &out, workers, seeds, keep_coefficients, cluster),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::IterationCap) => {
            eprintln!("warning: iteration cap reached before convergence; results were written");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
