//! Clipped stochastic proximal gradient solvers and their parameter recipes.

mod bounds;
mod momentum;
mod spgm;

pub use bounds::*;
pub use momentum::run_spgm_momentum;
pub use spgm::run_spgm;

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// Constants of a composite problem that enter the step-size and iteration
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant of `∇f`.
    pub lf: f64,
    /// Strong-convexity modulus of `f`.
    pub mu_f: f64,
    /// `sup ‖∇f(x)‖∞` over `dom h`.
    pub uf: f64,
    /// Diameter of `dom h`.
    pub dh: f64,
    /// Lower bound of `F` over `dom h`.
    pub flow: f64,
    /// `τ₍₁₎ = u₁ + U_f`.
    pub tau1_floor: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.lf.is_finite() && self.lf > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive, got {}",
                self.lf
            )));
        }
        if !(self.dh.is_finite() && self.dh > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain diameter must be positive and finite, got {}",
                self.dh
            )));
        }
        if !(self.mu_f >= 0.0 && self.uf >= 0.0) {
            return Err(Error::InvalidParameter(
                "strong-convexity modulus and gradient bound must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Clipped SPGM with uniform iterate averaging.
    Spgm,
    /// Clipped SPGM with a momentum search direction.
    SpgmMomentum,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `η_k = 2/(μ(k + 1))`.
    StronglyConvex { mu: f64 },
    /// `η_k` for `k = 0, 1, …`; must cover every step.
    Custom(Vec<f64>),
}

impl StepRule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            StepRule::Constant(eta) => *eta,
            StepRule::StronglyConvex { mu } => 2.0 / (mu * (k as f64 + 1.0)),
            StepRule::Custom(v) => v[k],
        }
    }

    fn validate(&self, steps: usize) -> Result<()> {
        let bad = |eta: f64| !(eta.is_finite() && eta > 0.0);
        match self {
            StepRule::Constant(eta) if bad(*eta) => Err(Error::InvalidParameter(format!(
                "step size must be positive, got {eta}"
            ))),
            StepRule::StronglyConvex { mu } if !(mu.is_finite() && *mu > 0.0) => {
                Err(Error::UnsupportedRegime(format!(
                    "strongly convex schedule needs μ > 0, got {mu}"
                )))
            }
            StepRule::Custom(v) if v.len() < steps => Err(Error::InvalidParameter(format!(
                "custom step schedule has {} entries, run needs {steps}",
                v.len()
            ))),
            StepRule::Custom(v) if v.iter().any(|e| bad(*e)) => Err(Error::InvalidParameter(
                "custom step schedule must be positive".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Clipping thresholds `τ_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClipPlan {
    Constant(f64),
    /// `τ = ∞`.
    Unclipped,
    /// `τ_k` for `k = 0, 1, …`; must cover every query point.
    PerIteration(Vec<f64>),
    /// `τ₀` for the initial query, `tau` afterwards.
    WarmStart { tau0: f64, tau: f64 },
}

impl ClipPlan {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            ClipPlan::Constant(tau) => *tau,
            ClipPlan::Unclipped => f64::INFINITY,
            ClipPlan::PerIteration(v) => v[k],
            ClipPlan::WarmStart { tau0, tau } => {
                if k == 0 {
                    *tau0
                } else {
                    *tau
                }
            }
        }
    }

    fn validate(&self, queries: usize) -> Result<()> {
        let bad = |t: f64| t.is_nan() || t < 0.0;
        let ok = match self {
            ClipPlan::Constant(t) => !bad(*t),
            ClipPlan::Unclipped => true,
            ClipPlan::PerIteration(v) => {
                if v.len() < queries {
                    return Err(Error::InvalidParameter(format!(
                        "clip plan has {} thresholds, run needs {queries}",
                        v.len()
                    )));
                }
                !v.iter().any(|t| bad(*t))
            }
            ClipPlan::WarmStart { tau0, tau } => !bad(*tau0) && !bad(*tau),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("clipping thresholds must be nonnegative".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algo: Algorithm,
    pub step: StepRule,
    /// Momentum weight θ ∈ (0, 1]; ignored by [`Algorithm::Spgm`].
    pub theta: f64,
    pub clip: ClipPlan,
    /// Iteration budget `K`.
    pub iterations: usize,
    /// Recorded for provenance; the oracle owns the actual stream.
    pub seed: u64,
    /// Starting point; the projection of the origin onto the box when absent.
    pub x0: Option<Vec<f64>>,
    /// Keep every iterate (and average or momentum) in the trajectory.
    pub keep_iterates: bool,
}

impl SolverConfig {
    pub fn new(algo: Algorithm, step: StepRule, clip: ClipPlan, iterations: usize) -> Self {
        Self {
            algo,
            step,
            theta: 1.0,
            clip,
            iterations,
            seed: 0,
            x0: None,
            keep_iterates: false,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub(crate) fn validate(&self, expected: Algorithm) -> Result<()> {
        if self.algo != expected {
            return Err(Error::InvalidParameter(format!(
                "config is for {:?}, solver runs {expected:?}",
                self.algo
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iteration budget must be at least 1".into()));
        }
        self.step.validate(self.iterations)?;
        self.clip.validate(self.iterations + 1)?;
        Ok(())
    }
}

/// Rows are written every `stride` iterations plus the final one.
pub const RECORD_LIMIT: usize = 10_000;

pub fn record_stride(iterations: usize) -> usize {
    if iterations <= RECORD_LIMIT {
        1
    } else {
        iterations.div_ceil(RECORD_LIMIT)
    }
}

/// One logged iteration. Row `k` describes `x^k`; the threshold and step are
/// the ones used to leave `x^k` (absent on the last row).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub iter: usize,
    pub obj_x: f64,
    /// `F(z^k)`, averaging solver only, `k ≥ 1`.
    pub obj_z: Option<f64>,
    /// Stationarity residual certified by the step into `x^k`, `k ≥ 1`.
    pub resid: Option<f64>,
    /// Exact `dist(0, ∇f(x^k) + ∂h(x^k))`.
    pub subdiff: f64,
    /// `f(x^k) + ‖m^k − ∇f(x^k)‖²/L`, momentum solver only.
    pub potential: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algo: Algorithm,
    pub rows: Vec<TrajectoryRow>,
    /// Residual after every step: entry `k` belongs to `x^{k+1}`.
    pub residuals: Vec<f64>,
    /// `x^0, …, x^K` when requested.
    pub iterates: Option<Vec<Vec<f64>>>,
    /// `z^1, …, z^K` when requested (averaging solver).
    pub averages: Option<Vec<Vec<f64>>>,
    /// `m^0, …, m^K` when requested (momentum solver).
    pub momenta: Option<Vec<Vec<f64>>>,
    pub x_final: Vec<f64>,
    pub z_final: Option<Vec<f64>>,
    pub m_final: Option<Vec<f64>>,
    /// `ι_K`, uniform on `{1, …, K}` (momentum solver).
    pub selected_index: Option<usize>,
    pub selected_x: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn initial_objective(&self) -> f64 {
        self.rows[0].obj_x
    }

    pub fn final_row(&self) -> &TrajectoryRow {
        self.rows.last().expect("trajectory has at least two rows")
    }

    /// `F(z^K)`, falling back to `F(x^K)` for the momentum solver.
    pub fn final_objective(&self) -> f64 {
        let last = self.final_row();
        last.obj_z.unwrap_or(last.obj_x)
    }

    /// Mean residual over the first and the last `fraction` of the steps.
    pub fn residual_window_means(&self, fraction: f64) -> (f64, f64) {
        let k = self.residuals.len();
        let w = ((k as f64 * fraction).round() as usize).clamp(1, k);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        (mean(&self.residuals[..w]), mean(&self.residuals[k - w..]))
    }
}

/// `‖∇f(x⁺) − m − (x⁺ − x)/η‖`: the norm of the element of
/// `∇f(x⁺) + ∂h(x⁺)` certified by the prox step `x⁺ = prox_{ηh}(x − ηm)`.
pub fn stationarity_residual(
    x_next: &[f64],
    x_prev: &[f64],
    m_prev: &[f64],
    eta: f64,
    grad_next: &[f64],
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {eta}")));
    }
    let n = x_next.len();
    if x_prev.len() != n || m_prev.len() != n || grad_next.len() != n {
        return Err(Error::InvalidInput("stationarity residual: dimension mismatch".into()));
    }
    Ok(residual_unchecked(x_next, x_prev, m_prev, eta, grad_next))
}

pub(crate) fn residual_unchecked(
    x_next: &[f64],
    x_prev: &[f64],
    m_prev: &[f64],
    eta: f64,
    grad_next: &[f64],
) -> f64 {
    let mut acc = 0.0;
    for i in 0..x_next.len() {
        let r = grad_next[i] - m_prev[i] - (x_next[i] - x_prev[i]) / eta;
        acc += r * r;
    }
    acc.sqrt()
}

/// Starting point for a run: the configured `x⁰` (checked against the
/// domain) or the projection of the origin.
pub(crate) fn starting_point(reg: &crate::linalg::BoxL1, x0: Option<&Vec<f64>>) -> Result<Vec<f64>> {
    match x0 {
        Some(x) => {
            if reg.contains(x) {
                Ok(x.clone())
            } else {
                Err(Error::InvalidStart(
                    "x⁰ must be finite, of the problem dimension, and inside the box".into(),
                ))
            }
        }
        None => Ok(reg
            .lower()
            .iter()
            .zip(reg.upper())
            .map(|(l, u)| 0.0f64.clamp(*l, *u))
            .collect()),
    }
}

pub(crate) fn momentum_gap_sq(m: &[f64], grad: &[f64]) -> f64 {
    let d: Vec<f64> = m.iter().zip(grad).map(|(a, b)| a - b).collect();
    norm2(&d).powi(2)
}
