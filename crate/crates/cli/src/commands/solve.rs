//! `solve` and `sweep`: solver runs over the Cartesian product of noise
//! models, thresholds, budgets, step sizes and seeds.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spgm_core::biasvar::{select_threshold, sigma_sq, TailBoundConstants};
use spgm_core::noise::{NoiseModel, NoisyGradientOracle};
use spgm_core::problems::CompositeProblem;
use spgm_core::rng::{stream, Lane};
use spgm_core::solvers::{
    eta_convex, eta_theta_ncvx, run_spgm, run_spgm_momentum, Algorithm, ClipPlan,
    ProblemConstants, SolverConfig, StepRule, Trajectory,
};

use crate::config::{AlgoKind, ExperimentConfig, StepKind, TauSpec};
use crate::error::{CliError, CliResult};
use crate::instance::Instance;
use crate::output::{ensure_dir, write_csv, write_text};
use crate::parallel::par_map;
use crate::plots;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TUNING_FILE: &str = "tuning.csv";

/// One solver run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub model_index: usize,
    pub model: NoiseModel,
    pub tau_index: usize,
    pub tau: TauSpec,
    pub iter_index: usize,
    pub iterations: usize,
    pub eta_index: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Cell {
    /// Gradient noise stream. It ignores the threshold and step size, so
    /// cells differing only in those see the same noise draws.
    pub fn noise_stream(&self) -> spgm_core::rng::StreamRng {
        stream(self.seed, Lane::GradientNoise, self.model_index as u64)
    }

    fn describe(&self) -> String {
        format!(
            "cell {}: noise={} tau={} iterations={} eta={} seed={}",
            self.index, self.model, self.tau, self.iterations, self.eta, self.seed
        )
    }
}

/// Cells in index order: model, threshold, budget, step size, seed.
pub fn build_cells(config: &ExperimentConfig) -> CliResult<Vec<Cell>> {
    let models = config.models()?;
    let taus = config.taus();
    let iters = config.iteration_counts();
    let etas = config.etas();
    let seeds = config.seeds();
    let count = models.len() * taus.len() * iters.len() * etas.len() * seeds.len();
    if count > config.max_cells {
        return Err(CliError::Config(format!(
            "sweep has {count} cells, more than the cap of {}",
            config.max_cells
        )));
    }
    let mut cells = Vec::with_capacity(count);
    for (mi, model) in models.iter().enumerate() {
        for (ti, tau) in taus.iter().enumerate() {
            for (ki, k) in iters.iter().enumerate() {
                for (ei, eta) in etas.iter().enumerate() {
                    for seed in &seeds {
                        cells.push(Cell {
                            index: cells.len(),
                            model_index: mi,
                            model: *model,
                            tau_index: ti,
                            tau: *tau,
                            iter_index: ki,
                            iterations: *k,
                            eta_index: ei,
                            eta: *eta,
                            seed: *seed,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Solver settings of a cell after threshold and step recipes are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub solver: SolverConfig,
    /// Threshold after the first query.
    pub tau: f64,
    /// First step size.
    pub eta: f64,
    pub theta: Option<f64>,
}

pub fn starting_point(problem: &dyn CompositeProblem) -> Vec<f64> {
    let reg = problem.regularizer();
    reg.lower().iter().zip(reg.upper()).map(|(l, u)| 0.0f64.clamp(*l, *u)).collect()
}

/// Resolves the cell's settings; `Ok(Err(reason))` marks a cell that is
/// skipped rather than run.
pub fn plan_cell(
    config: &ExperimentConfig,
    problem: &dyn CompositeProblem,
    cell: &Cell,
) -> CliResult<Result<Plan, String>> {
    let s = &config.solver;
    let consts: ProblemConstants = problem.constants(cell.model.tail().u1);
    let tail = TailBoundConstants::from_model(&cell.model, consts.uf, problem.dim())?;
    let k = cell.iterations;
    let algo = match s.algo {
        AlgoKind::Spgm => Algorithm::Spgm,
        AlgoKind::SpgmMomentum => Algorithm::SpgmMomentum,
    };
    let strongly_convex = algo == Algorithm::Spgm
        && (s.step == StepKind::Scvx || (s.step == StepKind::Theorem && consts.mu_f > 0.0));

    let tau = match cell.tau {
        TauSpec::Value(v) => v,
        TauSpec::Unclipped => f64::INFINITY,
        TauSpec::Theorem => {
            let eps = s.eps.expect("validated");
            let accuracy = match algo {
                Algorithm::SpgmMomentum => eps / 32.0,
                Algorithm::Spgm if strongly_convex => (consts.mu_f * eps / 2.0).sqrt(),
                Algorithm::Spgm => eps / (2.0 * consts.dh),
            };
            select_threshold(accuracy, &tail, &cell.model)?.tau
        }
    };

    let mut theta = s.theta;
    let step = match s.step {
        StepKind::Constant => StepRule::Constant(cell.eta),
        StepKind::Scvx => StepRule::StronglyConvex { mu: scvx_modulus(&consts)? },
        StepKind::Theorem => match algo {
            Algorithm::Spgm if strongly_convex => StepRule::StronglyConvex { mu: consts.mu_f },
            Algorithm::Spgm => StepRule::Constant(eta_convex(k as u64, &consts, sigma_sq(tau, &tail)?)?),
            Algorithm::SpgmMomentum => {
                let f0 = problem.objective(&starting_point(problem));
                let floor = sigma_sq(consts.tau1_floor, &tail)?;
                let (eta, th) = eta_theta_ncvx(k as u64, &consts, sigma_sq(tau, &tail)?, floor, f0)?;
                theta = Some(th);
                StepRule::Constant(eta)
            }
        },
    };
    let eta0 = step.at(0);

    let clip = match (algo, cell.tau, s.step) {
        // the first momentum query uses τ₍₁₎ in the nonconvex recipe
        (Algorithm::SpgmMomentum, TauSpec::Theorem, StepKind::Theorem) => ClipPlan::WarmStart {
            tau0: consts.tau1_floor,
            tau,
        },
        _ if tau.is_infinite() => ClipPlan::Unclipped,
        _ => ClipPlan::Constant(tau),
    };

    let mut solver = SolverConfig::new(algo, step, clip, k).with_seed(cell.seed);
    if algo == Algorithm::SpgmMomentum {
        let th = theta.unwrap_or(4.0 * consts.lf * eta0);
        if !(th > 0.0 && th <= 1.0) {
            return Ok(Err(format!("theta = {th} outside (0, 1]")));
        }
        theta = Some(th);
        solver = solver.with_theta(th);
    } else {
        theta = None;
    }
    Ok(Ok(Plan {
        solver,
        tau,
        eta: eta0,
        theta,
    }))
}

fn scvx_modulus(consts: &ProblemConstants) -> CliResult<f64> {
    if consts.mu_f > 0.0 {
        Ok(consts.mu_f)
    } else {
        Err(spgm_core::Error::UnsupportedRegime(
            "step rule \"scvx\" needs a strongly convex problem".into(),
        )
        .into())
    }
}

pub fn run_plan(problem: &dyn CompositeProblem, cell: &Cell, plan: &Plan) -> CliResult<Trajectory> {
    let mut oracle = NoisyGradientOracle::new(problem, cell.model, cell.noise_stream());
    Ok(match plan.solver.algo {
        Algorithm::Spgm => run_spgm(problem, &mut oracle, &plan.solver)?,
        Algorithm::SpgmMomentum => run_spgm_momentum(problem, &mut oracle, &plan.solver)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCsvRow {
    pub iter: usize,
    pub obj_x: f64,
    pub obj_z: Option<f64>,
    pub resid: Option<f64>,
    pub potential: Option<f64>,
    pub tau_k: Option<f64>,
    pub eta_k: Option<f64>,
}

pub fn trajectory_rows(t: &Trajectory) -> Vec<TrajectoryCsvRow> {
    t.rows
        .iter()
        .map(|r| TrajectoryCsvRow {
            iter: r.iter,
            obj_x: r.obj_x,
            obj_z: r.obj_z,
            resid: r.resid,
            potential: r.potential,
            tau_k: r.tau,
            eta_k: r.eta,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub model: String,
    pub alpha: f64,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    /// `ok`, or the reason the cell was skipped.
    pub status: String,
    pub f0: Option<f64>,
    /// `F(z^K)` for the averaging solver, `F(x^K)` for the momentum solver.
    pub final_obj: Option<f64>,
    pub best_obj: Option<f64>,
    pub f_ref: Option<f64>,
    pub final_gap: Option<f64>,
    pub resid_final: Option<f64>,
    pub resid_first10: Option<f64>,
    pub resid_last10: Option<f64>,
    pub selected_index: Option<usize>,
    pub obj_selected: Option<f64>,
}

impl SummaryRow {
    /// Tuning criterion: final objective for the averaging solver, late
    /// residual for the momentum solver.
    pub fn metric(&self, algo: AlgoKind) -> Option<f64> {
        match algo {
            AlgoKind::Spgm => self.final_obj,
            AlgoKind::SpgmMomentum => self.resid_last10,
        }
    }
}

pub fn summarize(
    problem: &dyn CompositeProblem,
    cell: &Cell,
    plan: Result<&Plan, &str>,
    trajectory: Option<&Trajectory>,
    f_ref: Option<f64>,
) -> SummaryRow {
    let mut row = SummaryRow {
        cell: cell.index,
        model: cell.model.to_string(),
        alpha: cell.model.alpha(),
        tau: None,
        eta: None,
        theta: None,
        iterations: cell.iterations,
        seed: cell.seed,
        status: String::new(),
        f0: None,
        final_obj: None,
        best_obj: None,
        f_ref,
        final_gap: None,
        resid_final: None,
        resid_first10: None,
        resid_last10: None,
        selected_index: None,
        obj_selected: None,
    };
    match plan {
        Err(reason) => row.status = format!("skipped: {reason}"),
        Ok(p) => {
            row.status = "ok".into();
            row.tau = Some(p.tau);
            row.eta = Some(p.eta);
            row.theta = p.theta;
        }
    }
    if let Some(t) = trajectory {
        let final_obj = t.final_objective();
        let best = t
            .rows
            .iter()
            .map(|r| r.obj_z.unwrap_or(r.obj_x))
            .fold(f64::INFINITY, f64::min);
        let (first, last) = t.residual_window_means(0.1);
        row.f0 = Some(t.initial_objective());
        row.final_obj = Some(final_obj);
        row.best_obj = Some(best);
        row.final_gap = f_ref.map(|r| final_obj - r);
        row.resid_final = t.residuals.last().copied();
        row.resid_first10 = Some(first);
        row.resid_last10 = Some(last);
        row.selected_index = t.selected_index;
        row.obj_selected = t.selected_x.as_ref().map(|x| problem.objective(x));
    }
    row
}

/// Plans, runs and summarizes one cell, writing its trajectory into
/// `traj_dir` when given.
pub fn run_cell(
    config: &ExperimentConfig,
    instance: &Instance,
    cell: &Cell,
    f_ref: Option<f64>,
    traj_dir: Option<&Path>,
) -> CliResult<(SummaryRow, Option<Trajectory>)> {
    let problem = instance.problem();
    match plan_cell(config, problem, cell)? {
        Err(reason) => Ok((summarize(problem, cell, Err(&reason), None, f_ref), None)),
        Ok(plan) => {
            let t = run_plan(problem, cell, &plan)?;
            if let Some(dir) = traj_dir {
                let echo = format!("{}# {}\n", config.echo(), cell.describe());
                write_csv(&dir.join(trajectory_file(cell.index)), &echo, &trajectory_rows(&t))?;
            }
            Ok((summarize(problem, cell, Ok(&plan), Some(&t), f_ref), Some(t)))
        }
    }
}

pub fn trajectory_file(index: usize) -> String {
    format!("traj_{index:05}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub model: String,
    pub alpha: f64,
    pub tau: String,
    pub iterations: usize,
    pub eta: f64,
    pub metric: String,
    /// Median of the metric over seeds; empty if any seed was skipped.
    pub median: Option<f64>,
    pub seeds: usize,
    pub selected: bool,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Per `(model, τ, K)`, the median metric of every step size and the
/// selected (smallest finite median) one.
pub fn tune(config: &ExperimentConfig, cells: &[Cell], rows: &[SummaryRow]) -> Vec<TuningRow> {
    let algo = config.solver.algo;
    let metric = match algo {
        AlgoKind::Spgm => "final_obj",
        AlgoKind::SpgmMomentum => "resid_last10",
    };
    let mut out: Vec<TuningRow> = Vec::new();
    let mut group_start = 0;
    let mut i = 0;
    while i < cells.len() {
        let c = &cells[i];
        let mut j = i;
        let mut values = Vec::new();
        let mut complete = true;
        while j < cells.len()
            && cells[j].model_index == c.model_index
            && cells[j].tau_index == c.tau_index
            && cells[j].iter_index == c.iter_index
            && cells[j].eta_index == c.eta_index
        {
            match rows[j].metric(algo) {
                Some(v) => values.push(v),
                None => complete = false,
            }
            j += 1;
        }
        let med = if complete { median(&mut values) } else { None };
        // a new (model, τ, K) group starts whenever the step index resets
        if c.eta_index == 0 {
            group_start = out.len();
        }
        out.push(TuningRow {
            model: c.model.to_string(),
            alpha: c.model.alpha(),
            tau: c.tau.to_string(),
            iterations: c.iterations,
            eta: c.eta,
            metric: metric.into(),
            median: med,
            seeds: j - i,
            selected: false,
        });
        let group_end = out.len();
        let last_in_group = j == cells.len() || cells[j].eta_index == 0;
        if last_in_group {
            let best = (group_start..group_end)
                .filter(|&r| out[r].median.is_some_and(f64::is_finite))
                .min_by(|&a, &b| out[a].median.unwrap().total_cmp(&out[b].median.unwrap()));
            if let Some(b) = best {
                out[b].selected = true;
            }
        }
        i = j;
    }
    out
}

pub struct SweepOutput {
    pub cells: Vec<Cell>,
    pub summary: Vec<SummaryRow>,
    pub tuning: Vec<TuningRow>,
}

fn run_sweep(config: &ExperimentConfig, with_trajectories: bool) -> CliResult<SweepOutput> {
    let instance = Instance::build(config)?;
    let cells = build_cells(config)?;
    let f_ref = instance.reference_value()?;
    ensure_dir(&config.out)?;
    let traj_dir = with_trajectories.then_some(config.out.as_path());
    let summary = par_map(config.jobs, &cells, |cell| {
        run_cell(config, &instance, cell, f_ref, traj_dir).map(|(row, _)| row)
    })?;
    let tuning = tune(config, &cells, &summary);
    let echo = config.echo();
    write_csv(&config.out.join(SUMMARY_FILE), &echo, &summary)?;
    write_csv(&config.out.join(TUNING_FILE), &echo, &tuning)?;
    if let Some(text) = instance.to_text() {
        write_text(&config.out.join("instance.txt"), &text)?;
    }
    Ok(SweepOutput {
        cells,
        summary,
        tuning,
    })
}

pub fn cmd_solve(config: &ExperimentConfig) -> CliResult<SweepOutput> {
    let out = run_sweep(config, true)?;
    write_text(&config.out.join("plot_solve.py"), plots::SOLVE)?;
    Ok(out)
}

pub fn cmd_sweep(config: &ExperimentConfig) -> CliResult<SweepOutput> {
    let out = run_sweep(config, false)?;
    write_text(&config.out.join("plot_sweep.py"), plots::SWEEP)?;
    Ok(out)
}
