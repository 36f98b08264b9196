use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{biasvar, bounds, selftest, solve};
use crate::config::{AlgoKind, CommandKind, ExperimentConfig, Overrides, ProblemKind, StepKind, TauSpec};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "spgm", version, about = "Clipped stochastic proximal gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo bias and variance of the clipped estimator over a threshold grid
    Biasvar(RunArgs),
    /// Solver runs with one trajectory CSV per cell
    Solve(RunArgs),
    /// Solver runs over the sweep axes, summary and tuning tables only
    Sweep(RunArgs),
    /// Thresholds, step recipes and iteration bounds for target accuracies
    Bounds(RunArgs),
    /// Quick check of the numerical kernels
    Selftest(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on it
    #[arg(long)]
    pub jobs: Option<usize>,
    /// lasso-box, robust-regression, quad-box or instance
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    /// zero, cauchy, gaussian[:σ] or pareto-sym:α
    #[arg(long)]
    pub noise: Option<String>,
    /// spgm or spgm-momentum
    #[arg(long)]
    pub algo: Option<AlgoKind>,
    /// constant, scvx or theorem
    #[arg(long)]
    pub step: Option<StepKind>,
    /// Step size, or a comma-separated list to sweep
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Threshold (number, inf or theorem), or a comma-separated list
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<TauSpec>>,
    /// Iteration budget, or a comma-separated list
    #[arg(long, value_delimiter = ',')]
    pub iterations: Option<Vec<usize>>,
    /// Comma-separated run seeds
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated tail indices of pareto-sym noise
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Target accuracy (one value for solve, a list for bounds)
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Monte-Carlo samples per biasvar group
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_cells: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            jobs: self.jobs,
            problem: self.problem,
            noise: self.noise.clone(),
            algo: self.algo,
            step: self.step,
            eta: self.eta.clone(),
            theta: self.theta,
            tau: self.tau.clone(),
            iterations: self.iterations.clone(),
            seeds: self.seeds.clone(),
            alpha: self.alpha.clone(),
            eps: self.eps.clone(),
            samples: self.samples,
            max_cells: self.max_cells,
        }
    }
}

/// Effective config of a subcommand: file (or defaults), then flags.
pub fn effective_config(kind: CommandKind, args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.command = kind;
    config.apply(&args.overrides());
    config.validate()?;
    Ok(config)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let (kind, args) = match &cli.command {
        Command::Biasvar(a) => (CommandKind::Biasvar, a),
        Command::Solve(a) => (CommandKind::Solve, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::Bounds(a) => (CommandKind::Bounds, a),
        Command::Selftest(a) => (CommandKind::Selftest, a),
    };
    let config = effective_config(kind, args)?;
    match kind {
        CommandKind::Biasvar => {
            let rows = biasvar::cmd_biasvar(&config)?;
            eprintln!("wrote {} rows to {}", rows.len(), config.out.display());
        }
        CommandKind::Solve => {
            let out = solve::cmd_solve(&config)?;
            eprintln!("ran {} cells into {}", out.cells.len(), config.out.display());
        }
        CommandKind::Sweep => {
            let out = solve::cmd_sweep(&config)?;
            eprintln!("ran {} cells into {}", out.cells.len(), config.out.display());
        }
        CommandKind::Bounds => {
            bounds::cmd_bounds(&config)?;
        }
        CommandKind::Selftest => selftest::cmd_selftest(config.seed)?,
    }
    Ok(())
}
