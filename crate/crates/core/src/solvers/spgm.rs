use super::{
    record_stride, residual_unchecked, starting_point, Algorithm, SolverConfig, Trajectory,
    TrajectoryRow,
};
use crate::error::{Error, Result};
use crate::linalg::clip_inf_in_place;
use crate::noise::StochasticGradient;
use crate::problems::CompositeProblem;

/// Clipped SPGM with uniform averaging:
/// `x^{k+1} = prox_{η_k h}(x^k − η_k·clip(G(x^k; ξ_k), τ_k))` and
/// `z^{k+1} = (x^1 + … + x^{k+1})/(k + 1)`.
pub fn run_spgm<P, O>(problem: &P, oracle: &mut O, config: &SolverConfig) -> Result<Trajectory>
where
    P: CompositeProblem + ?Sized,
    O: StochasticGradient + ?Sized,
{
    config.validate(Algorithm::Spgm)?;
    if oracle.dim() != problem.dim() {
        return Err(Error::InvalidInput(format!(
            "oracle dimension {} does not match problem dimension {}",
            oracle.dim(),
            problem.dim()
        )));
    }
    let reg = problem.regularizer();
    let n = problem.dim();
    let k_max = config.iterations;
    let stride = record_stride(k_max);

    let mut x = starting_point(reg, config.x0.as_ref())?;
    let mut grad = vec![0.0; n];
    let mut f_x = problem.value_and_gradient(&x, &mut grad);
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    let mut sum = vec![0.0; n];
    let mut z = vec![0.0; n];

    let mut rows = Vec::with_capacity(k_max / stride + 2);
    let mut residuals = Vec::with_capacity(k_max);
    let mut iterates = config.keep_iterates.then(|| vec![x.clone()]);
    let mut averages = config.keep_iterates.then(Vec::new);

    rows.push(TrajectoryRow {
        iter: 0,
        obj_x: f_x + reg.value(&x),
        obj_z: None,
        resid: None,
        subdiff: reg.subdifferential_distance(&x, &grad),
        potential: None,
        tau: Some(config.clip.at(0)),
        eta: Some(config.step.at(0)),
    });

    for k in 0..k_max {
        let tau = config.clip.at(k);
        let eta = config.step.at(k);
        oracle.sample(&x, &grad, &mut g);
        clip_inf_in_place(&mut g, tau);
        for i in 0..n {
            trial[i] = x[i] - eta * g[i];
        }
        reg.prox_into(&trial, eta, &mut x_next);

        let count = (k + 1) as f64;
        for i in 0..n {
            sum[i] += x_next[i];
            z[i] = sum[i] / count;
        }

        f_x = problem.value_and_gradient(&x_next, &mut grad);
        let resid = residual_unchecked(&x_next, &x, &g, eta, &grad);
        residuals.push(resid);
        std::mem::swap(&mut x, &mut x_next);

        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        if let Some(av) = averages.as_mut() {
            av.push(z.clone());
        }
        let iter = k + 1;
        if iter % stride == 0 || iter == k_max {
            let last = iter == k_max;
            rows.push(TrajectoryRow {
                iter,
                obj_x: f_x + reg.value(&x),
                obj_z: Some(problem.objective(&z)),
                resid: Some(resid),
                subdiff: reg.subdifferential_distance(&x, &grad),
                potential: None,
                tau: (!last).then(|| config.clip.at(iter)),
                eta: (!last).then(|| config.step.at(iter)),
            });
        }
    }

    Ok(Trajectory {
        algo: Algorithm::Spgm,
        rows,
        residuals,
        iterates,
        averages,
        momenta: None,
        x_final: x,
        z_final: Some(z),
        m_final: None,
        selected_index: None,
        selected_x: None,
    })
}
