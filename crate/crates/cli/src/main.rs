//! `aspot`: run the POT solvers and experiments from the command line.
//!
//! Exit codes: 0 on success (including runs stopped by the iteration cap,
//! which report `converged: false`), 1 on runtime failure, 2 on bad usage.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use aspot_core::{BlockRule, SolverConfig, SolverKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aspot", version, about = "Entropic partial optimal transport solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance JSON and write plan.json, trace.csv and summary.json.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverName::Aspot)]
        solver: SolverName,
        #[command(flatten)]
        solver_args: SolverArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run several solvers on one instance and write their traces side by side.
    Compare {
        instance: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "aspot,sinkhorn,tuned-sinkhorn")]
        solvers: Vec<SolverName>,
        #[command(flatten)]
        solver_args: SolverArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Exact optimum of a small instance by the simplex method.
    Oracle {
        instance: PathBuf,
        /// Largest support size accepted.
        #[arg(long, default_value_t = aspot_core::oracle::EXACT_SIZE_LIMIT)]
        max_size: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Time a solver on the synthetic scaling family and fit a log-log slope.
    BenchScaling {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SolverName::Aspot)]
        solver: SolverName,
        #[arg(long, default_value_t = 1e-3)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1500)]
        max_iter: usize,
        /// Minimum timed runs per size; the fastest counts.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Transfer the colors of TARGET onto SOURCE (binary PPM images).
    ColorTransfer {
        source: PathBuf,
        target: PathBuf,
        /// Number of k-means colors per image.
        #[arg(long, default_value_t = 64)]
        colors: usize,
        /// Budget as a fraction of the smaller histogram mass.
        #[arg(long, default_value_t = 0.2)]
        s_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SolverName::Aspot)]
        solver: SolverName,
        #[command(flatten)]
        solver_args: SolverArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Rigidly align SOURCE onto TARGET (ASCII "x y z" clouds).
    Register {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverName::Aspot)]
        solver: SolverName,
        /// JSON file with registration settings; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long)]
        anneal_rate: Option<f64>,
        #[arg(long)]
        max_registrations: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum)]
        block_rule: Option<BlockRuleName>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write seeded synthetic inputs.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
}

#[derive(Subcommand)]
enum Generate {
    /// Random instance with uniform costs scaled to max 1.
    Random {
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 5)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Instance from the scaling family (masses 5 and 3).
    Scaling {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// A source/target pair of gradient images.
    Images {
        #[arg(long, default_value_t = 64)]
        size: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Partially overlapping clouds related by a known rotation.
    Clouds {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long, default_value_t = 30.0)]
        angle: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverName {
    Aspot,
    Sinkhorn,
    TunedSinkhorn,
}

impl From<SolverName> for SolverKind {
    fn from(s: SolverName) -> Self {
        match s {
            SolverName::Aspot => SolverKind::Aspot,
            SolverName::Sinkhorn => SolverKind::Sinkhorn,
            SolverName::TunedSinkhorn => SolverKind::TunedSinkhorn,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BlockRuleName {
    Greedy,
    RoundRobin,
}

impl From<BlockRuleName> for BlockRule {
    fn from(b: BlockRuleName) -> Self {
        match b {
            BlockRuleName::Greedy => BlockRule::Greedy,
            BlockRuleName::RoundRobin => BlockRule::RoundRobin,
        }
    }
}

/// Solver settings. Flags override `--config`, which overrides the defaults.
#[derive(Args, Clone, Debug, Default)]
struct SolverArgs {
    /// JSON file with solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Replace the derived regularization.
    #[arg(long)]
    gamma: Option<f64>,
    /// Exponent of the tuned Sinkhorn regularization.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    block_rule: Option<BlockRuleName>,
    /// Replace the derived stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Replace the dummy-node penalty.
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    log_every: Option<usize>,
    /// Single-threaded evaluation (the default).
    #[arg(long, conflicts_with = "parallel")]
    deterministic: bool,
    /// Evaluate the kernel matrix on all cores.
    #[arg(long)]
    parallel: bool,
}

impl SolverArgs {
    fn to_config(&self) -> commands::CliResult<SolverConfig> {
        let mut config = match &self.config {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            None => SolverConfig::default(),
        };
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.gamma {
            config.gamma_override = Some(v);
        }
        if let Some(v) = self.p {
            config.tuning_exponent_p = v;
        }
        if let Some(v) = self.max_iter {
            config.max_iterations = v;
        }
        if let Some(v) = self.block_rule {
            config.block_rule = v.into();
        }
        if let Some(v) = self.tol {
            config.tolerance_override = Some(v);
        }
        if let Some(v) = self.penalty {
            config.penalty_override = Some(v);
        }
        if let Some(v) = self.log_every {
            config.log_every = v;
        }
        if self.deterministic {
            config.deterministic = true;
        }
        if self.parallel {
            config.deterministic = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
