use serde::{Deserialize, Serialize};
use spgm_core::biasvar::{
    estimate_from_draws, lemma31_bias_bound, lemma31_var_bound, TailBoundConstants,
};
use spgm_core::noise::NoiseModel;
use spgm_core::rng::{stream, Lane};
use spgm_core::Error;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{ensure_dir, write_csv, write_text};
use crate::parallel::par_map;
use crate::plots;

pub const BIASVAR_FILE: &str = "biasvar.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarRow {
    pub model: String,
    pub alpha: f64,
    pub a: f64,
    pub tau: f64,
    pub bias_hat: f64,
    pub stderr_bias: f64,
    pub var_hat: f64,
    pub stderr_var: f64,
    /// Empty where the bound is undefined (`τ < u₁ + |a|`).
    pub bias_bound: Option<f64>,
    pub var_bound: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// Noise draws shared by every threshold of one `(model, a)` group, so the
/// differences between thresholds are free of sampling noise between them.
pub fn group_draws(model: &NoiseModel, n: usize, seed: u64, group: usize) -> Vec<f64> {
    let mut rng = stream(seed, Lane::Estimation, group as u64);
    let mut draws = vec![0.0; n];
    model.fill(&mut draws, &mut rng);
    draws
}

fn optional(r: spgm_core::Result<f64>) -> CliResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Domain(_) | Error::UnsupportedModel(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// All rows of the `(model, a, τ)` grid, ordered by model, then `a`, then `τ`.
pub fn run_grid(config: &ExperimentConfig) -> CliResult<Vec<BiasVarRow>> {
    let models = config.biasvar_models()?;
    let offsets = &config.biasvar.offsets;
    let taus = config.biasvar.tau.values()?;
    let n = config.biasvar.samples;
    let groups: Vec<(usize, NoiseModel, f64)> = models
        .iter()
        .enumerate()
        .flat_map(|(i, m)| offsets.iter().enumerate().map(move |(j, a)| (i * offsets.len() + j, *m, *a)))
        .collect();
    let per_group = par_map(config.jobs, &groups, |(g, model, a)| {
        let draws = group_draws(model, n, config.seed, *g);
        let consts = TailBoundConstants::from_model(model, 0.0, 1)?;
        taus.iter()
            .map(|&tau| {
                let e = estimate_from_draws(&draws, *a, tau)?;
                Ok(BiasVarRow {
                    model: model.to_string(),
                    alpha: model.alpha(),
                    a: *a,
                    tau,
                    bias_hat: e.bias_hat,
                    stderr_bias: e.stderr_bias,
                    var_hat: e.var_hat,
                    stderr_var: e.stderr_var,
                    bias_bound: optional(lemma31_bias_bound(&consts, model, *a, tau))?,
                    var_bound: optional(lemma31_var_bound(&consts, *a, tau))?,
                    n_samples: e.n_samples,
                    seed: config.seed,
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    Ok(per_group.into_iter().flatten().collect())
}

pub fn cmd_biasvar(config: &ExperimentConfig) -> CliResult<Vec<BiasVarRow>> {
    let rows = run_grid(config)?;
    ensure_dir(&config.out)?;
    write_csv(&config.out.join(BIASVAR_FILE), &config.echo(), &rows)?;
    write_text(&config.out.join("plot_biasvar.py"), plots::BIASVAR)?;
    Ok(rows)
}
