use rand::Rng;

use super::{
    momentum_gap_sq, record_stride, residual_unchecked, starting_point, Algorithm, SolverConfig,
    Trajectory, TrajectoryRow,
};
use crate::error::{Error, Result};
use crate::linalg::clip_inf_in_place;
use crate::noise::StochasticGradient;
use crate::problems::CompositeProblem;

/// Clipped SPGM with momentum:
/// `m⁰ = clip(G(x⁰; ξ₀), τ₀)`, `x^{k+1} = prox_{ηh}(x^k − η m^k)` and
/// `m^{k+1} = (1 − θ) m^k + θ·clip(G(x^{k+1}; ξ_{k+1}), τ_{k+1})`.
///
/// After the loop `ι_K` is drawn uniformly from `{1, …, K}` as the last draw
/// of the oracle stream, so every iterate is stored until then.
pub fn run_spgm_momentum<P, O>(
    problem: &P,
    oracle: &mut O,
    config: &SolverConfig,
) -> Result<Trajectory>
where
    P: CompositeProblem + ?Sized,
    O: StochasticGradient + ?Sized,
{
    config.validate(Algorithm::SpgmMomentum)?;
    let theta = config.theta;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "momentum weight must lie in (0, 1], got {theta}"
        )));
    }
    if oracle.dim() != problem.dim() {
        return Err(Error::InvalidInput(format!(
            "oracle dimension {} does not match problem dimension {}",
            oracle.dim(),
            problem.dim()
        )));
    }
    let reg = problem.regularizer();
    let n = problem.dim();
    let lf = problem.lipschitz();
    let k_max = config.iterations;
    let stride = record_stride(k_max);

    let mut x = starting_point(reg, config.x0.as_ref())?;
    let mut grad = vec![0.0; n];
    let mut f_x = problem.value_and_gradient(&x, &mut grad);
    let mut m = vec![0.0; n];
    oracle.sample(&x, &grad, &mut m);
    clip_inf_in_place(&mut m, config.clip.at(0));

    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut x_next = vec![0.0; n];

    let mut rows = Vec::with_capacity(k_max / stride + 2);
    let mut residuals = Vec::with_capacity(k_max);
    let mut history: Vec<f64> = Vec::with_capacity((k_max + 1) * n);
    history.extend_from_slice(&x);
    let mut momenta = config.keep_iterates.then(|| vec![m.clone()]);

    rows.push(TrajectoryRow {
        iter: 0,
        obj_x: f_x + reg.value(&x),
        obj_z: None,
        resid: None,
        subdiff: reg.subdifferential_distance(&x, &grad),
        potential: Some(f_x + momentum_gap_sq(&m, &grad) / lf),
        tau: Some(config.clip.at(0)),
        eta: Some(config.step.at(0)),
    });

    for k in 0..k_max {
        let eta = config.step.at(k);
        for i in 0..n {
            trial[i] = x[i] - eta * m[i];
        }
        reg.prox_into(&trial, eta, &mut x_next);
        f_x = problem.value_and_gradient(&x_next, &mut grad);
        let resid = residual_unchecked(&x_next, &x, &m, eta, &grad);
        residuals.push(resid);

        let tau_next = config.clip.at(k + 1);
        oracle.sample(&x_next, &grad, &mut g);
        clip_inf_in_place(&mut g, tau_next);
        for i in 0..n {
            m[i] = (1.0 - theta) * m[i] + theta * g[i];
        }
        std::mem::swap(&mut x, &mut x_next);
        history.extend_from_slice(&x);
        if let Some(ms) = momenta.as_mut() {
            ms.push(m.clone());
        }

        let iter = k + 1;
        if iter % stride == 0 || iter == k_max {
            let last = iter == k_max;
            rows.push(TrajectoryRow {
                iter,
                obj_x: f_x + reg.value(&x),
                obj_z: None,
                resid: Some(resid),
                subdiff: reg.subdifferential_distance(&x, &grad),
                potential: Some(f_x + momentum_gap_sq(&m, &grad) / lf),
                tau: (!last).then(|| config.clip.at(iter)),
                eta: (!last).then(|| config.step.at(iter)),
            });
        }
    }

    let selected = oracle.rng().random_range(1..=k_max);
    let selected_x = history[selected * n..(selected + 1) * n].to_vec();
    let iterates = config
        .keep_iterates
        .then(|| history.chunks_exact(n).map(<[f64]>::to_vec).collect());

    Ok(Trajectory {
        algo: Algorithm::SpgmMomentum,
        rows,
        residuals,
        iterates,
        averages: None,
        momenta,
        x_final: x,
        z_final: None,
        m_final: Some(m),
        selected_index: Some(selected),
        selected_x: Some(selected_x),
    })
}
