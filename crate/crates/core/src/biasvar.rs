//! Bias and variance of the clipped estimator `Π_{[-τ,τ]}(a + ζ)` of `a`:
//! Monte-Carlo estimates, closed-form bounds, and threshold recipes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{clip_inf_in_place, dist2, BoxL1};
use crate::noise::{DecayConstants, Density, NoiseModel, NoisyGradientOracle, StochasticGradient};
use crate::problems::SmoothPart;
use crate::quad::integrate;

/// Absolute tolerance of the quadrature oracles.
pub const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVarEstimate {
    pub tau: f64,
    pub a: f64,
    /// `|mean(Π(a + ζᵢ)) − a|`.
    pub bias_hat: f64,
    pub stderr_bias: f64,
    /// `mean((Π(a + ζᵢ) − a)²)`.
    pub var_hat: f64,
    pub stderr_var: f64,
    pub n_samples: usize,
}

/// Running mean and sum of squared deviations. Constant input gives the
/// constant back exactly.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        (var / self.n as f64).sqrt()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "clipping threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(())
}

fn check_offset(a: f64) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter(format!("offset must be finite, got {a}")));
    }
    Ok(())
}

/// Clipped deviation `Π_{[-τ,τ]}(a + ζ) − a`.
#[inline]
fn deviation(a: f64, zeta: f64, tau: f64) -> f64 {
    (a + zeta).clamp(-tau, tau) - a
}

/// Bias and variance from a fixed set of noise draws.
pub fn estimate_from_draws(draws: &[f64], a: f64, tau: f64) -> Result<BiasVarEstimate> {
    check_tau(tau)?;
    check_offset(a)?;
    if draws.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut first = Welford::default();
    let mut second = Welford::default();
    for &z in draws {
        let d = deviation(a, z, tau);
        first.push(d);
        second.push(d * d);
    }
    Ok(BiasVarEstimate {
        tau,
        a,
        bias_hat: first.mean.abs(),
        stderr_bias: first.stderr(),
        var_hat: second.mean,
        stderr_var: second.stderr(),
        n_samples: draws.len(),
    })
}

/// Draws `n_samples` values from `model` and estimates bias and variance.
pub fn estimate_bias_variance<R: Rng + ?Sized>(
    model: &NoiseModel,
    a: f64,
    tau: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<BiasVarEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    check_tau(tau)?;
    let draws: Vec<f64> = (0..n_samples).map(|_| model.sample(rng)).collect();
    estimate_from_draws(&draws, a, tau)
}

/// Mean and standard error of `Σ_j w_j (Π_{[-τ_j,τ_j]}(a + ζ) − a)²` over the
/// same draws, for comparing variances at several thresholds without the
/// noise of independent samples.
pub fn variance_contrast(draws: &[f64], a: f64, terms: &[(f64, f64)]) -> Result<(f64, f64)> {
    check_offset(a)?;
    if draws.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    for (tau, _) in terms {
        check_tau(*tau)?;
    }
    let mut acc = Welford::default();
    for &z in draws {
        let v: f64 = terms
            .iter()
            .map(|&(tau, w)| {
                let d = deviation(a, z, tau);
                w * d * d
            })
            .sum();
        acc.push(v);
    }
    Ok((acc.mean, acc.stderr()))
}

/// Constants entering the one-dimensional clipping bounds and `σ²(τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundConstants {
    /// Tail index at which the constants hold.
    pub alpha: f64,
    /// Moment bound `E|ζ|^α ≤ Λ₁`.
    pub lambda1: f64,
    /// Density envelope `p(z) ≤ Λ₂|z|^{-(α+1)}` for `|z| ≥ z₁`.
    pub lambda2: f64,
    pub z1: f64,
    /// `sup ‖∇f‖∞` over the domain.
    pub uf: f64,
    /// Dimension.
    pub n: usize,
}

impl TailBoundConstants {
    pub fn new(alpha: f64, lambda1: f64, lambda2: f64, z1: f64, uf: f64, n: usize) -> Result<Self> {
        let c = Self {
            alpha,
            lambda1,
            lambda2,
            z1,
            uf,
            n,
        };
        c.validate()?;
        Ok(c)
    }

    /// Working-index constants of `model` for a problem with gradient bound
    /// `uf` in dimension `n`.
    pub fn from_model(model: &NoiseModel, uf: f64, n: usize) -> Result<Self> {
        let t = model.tail();
        Self::new(t.working_alpha, t.lambda1, t.lambda2, t.u1, uf, n)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "tail index must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_nonneg(self.lambda1) && finite_nonneg(self.lambda2) && finite_nonneg(self.uf)) {
            return Err(Error::InvalidParameter(
                "tail constants and gradient bound must be finite and nonnegative".into(),
            ));
        }
        if !(self.z1.is_finite() && self.z1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail onset must be positive, got {}",
                self.z1
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(())
    }

    /// `τ₍₁₎ = z₁ + U_f`.
    pub fn tau1_floor(&self) -> f64 {
        self.z1 + self.uf
    }
}

fn check_lemma_domain(consts: &TailBoundConstants, a: f64, tau: f64) -> Result<()> {
    check_offset(a)?;
    if !(tau >= consts.z1 + a.abs()) {
        return Err(Error::Domain(format!(
            "bound needs τ ≥ z₁ + |a| = {}, got {tau}",
            consts.z1 + a.abs()
        )));
    }
    Ok(())
}

/// `∫_{-τ}^{τ} z p(z) dz`.
pub fn truncated_mean(density: &dyn Density, tau: f64) -> f64 {
    if density.is_symmetric() {
        return 0.0;
    }
    integrate(|z| z * density.pdf(z), -tau, 0.0, 0.5 * QUAD_TOL)
        + integrate(|z| z * density.pdf(z), 0.0, tau, 0.5 * QUAD_TOL)
}

/// `τ ∫_τ^∞ (p(z) − p(−z)) dz`.
pub fn tail_asymmetry(density: &dyn Density, tau: f64) -> f64 {
    if density.is_symmetric() {
        return 0.0;
    }
    tau * integrate(|z| density.pdf(z) - density.pdf(-z), tau, f64::INFINITY, QUAD_TOL / tau.max(1.0))
}

/// Bounds on `|truncated_mean|` and `|tail_asymmetry|` for a mean-zero
/// density with `p(z) ≤ M|z|^{-(α+1)}` beyond `z₁`, valid for `α ∈ (1, 2]`
/// and `τ ≥ z₁`.
pub fn decay_bounds(m: f64, alpha: f64, tau: f64) -> Result<(f64, f64)> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::UnsupportedRegime(format!(
            "decay bounds need α ∈ (1, 2], got {alpha}"
        )));
    }
    let scale = 2.0 * m / tau.powf(alpha - 1.0);
    Ok((scale / (alpha - 1.0), scale / alpha))
}

/// Upper bound on `|E[Π_{[-τ,τ]}(a + ζ)] − a|` for `τ ≥ z₁ + |a|`.
pub fn lemma31_bias_bound(
    consts: &TailBoundConstants,
    model: &NoiseModel,
    a: f64,
    tau: f64,
) -> Result<f64> {
    let density = model.density().ok_or_else(|| {
        Error::UnsupportedModel(format!("noise model {model} has no exact density"))
    })?;
    lemma31_bias_bound_with(consts, &density, a, tau)
}

/// [`lemma31_bias_bound`] for an arbitrary density.
pub fn lemma31_bias_bound_with(
    consts: &TailBoundConstants,
    density: &dyn Density,
    a: f64,
    tau: f64,
) -> Result<f64> {
    check_lemma_domain(consts, a, tau)?;
    let aa = a.abs();
    let alpha = consts.alpha;
    let gap = tau - aa;
    let third = 2.0 * consts.lambda2 * aa / gap.powf(alpha) * (aa / gap + 1.0 / alpha);
    Ok(truncated_mean(density, tau).abs() + tail_asymmetry(density, tau).abs() + third)
}

/// Upper bound on `E[(Π_{[-τ,τ]}(a + ζ) − a)²]` for `τ ≥ z₁ + |a|`.
pub fn lemma31_var_bound(consts: &TailBoundConstants, a: f64, tau: f64) -> Result<f64> {
    check_lemma_domain(consts, a, tau)?;
    let aa = a.abs();
    let alpha = consts.alpha;
    Ok(consts.lambda1 * (tau + aa).powf(2.0 - alpha)
        + 2.0 * consts.lambda2 * (tau * tau + a * a) / (alpha * (tau - aa).powf(alpha)))
}

/// `σ²(τ) = n[Λ₁(τ + U_f)^{2−α} + 2Λ₂(τ² + U_f²)/(α(τ − U_f)^α)]`.
pub fn sigma_sq(tau: f64, consts: &TailBoundConstants) -> Result<f64> {
    let u = consts.uf;
    if !(tau > u) {
        return Err(Error::Domain(format!("σ²(τ) needs τ > U_f = {u}, got {tau}")));
    }
    let alpha = consts.alpha;
    Ok(consts.n as f64
        * (consts.lambda1 * (tau + u).powf(2.0 - alpha)
            + 2.0 * consts.lambda2 * (tau * tau + u * u) / (alpha * (tau - u).powf(alpha))))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target accuracy must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Threshold with bias at most `ε` for tail index `α ∈ (1, 2]`:
/// `max{τ_min, (6√nΛ₂/((α−1)ε))^{1/(α−1)}, U_f + (4√nΛ₂U_fτ_min/(z₁ε))^{1/α}}`
/// with `τ_min = τ₍₁₎`.
pub fn tau1_eps(eps: f64, consts: &TailBoundConstants, tau_min: f64) -> Result<f64> {
    check_eps(eps)?;
    let alpha = consts.alpha;
    if alpha <= 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "τ₁(ε) needs α > 1, got {alpha}; supply decay constants and use tau2_eps"
        )));
    }
    let rn = (consts.n as f64).sqrt();
    let l2 = consts.lambda2;
    let u = consts.uf;
    let second = (6.0 * rn * l2 / ((alpha - 1.0) * eps)).powf(1.0 / (alpha - 1.0));
    let third = u + (4.0 * rn * l2 * u * tau_min / (consts.z1 * eps)).powf(1.0 / alpha);
    Ok(tau_min.max(second).max(third))
}

/// Threshold with bias at most `ε` under the decay condition:
/// `max{τ₂_min, (2√n(Γ₁+Γ₂)/ε)^{1/α}, U_f + (4√nΛ₂U_f(U_f/z₁ + 1/α)/ε)^{1/α}}`.
pub fn tau2_eps(
    eps: f64,
    consts: &TailBoundConstants,
    gamma1: f64,
    gamma2: f64,
    tau2_min: f64,
) -> Result<f64> {
    check_eps(eps)?;
    if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
        return Err(Error::InvalidParameter("decay constants must be nonnegative".into()));
    }
    let alpha = consts.alpha;
    let rn = (consts.n as f64).sqrt();
    let u = consts.uf;
    let second = (2.0 * rn * (gamma1 + gamma2) / eps).powf(1.0 / alpha);
    let third =
        u + (4.0 * rn * consts.lambda2 * u * (u / consts.z1 + 1.0 / alpha) / eps).powf(1.0 / alpha);
    Ok(tau2_min.max(second).max(third))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    Tau1,
    Tau2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub tau: f64,
    pub rule: ThresholdRule,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

/// Smallest available theorem threshold for accuracy `ε`.
///
/// `τ₁(ε)` needs a working index above 1; `τ₂(ε)` needs the model's decay
/// constants and is floored at `max(τ₍₂₎, τ₍₁₎)` so the result stays in the
/// admissible range.
pub fn select_threshold(
    eps: f64,
    consts: &TailBoundConstants,
    model: &NoiseModel,
) -> Result<ThresholdChoice> {
    select_threshold_with(eps, consts, model.tail().decay).map_err(|e| match e {
        Error::UnsupportedRegime(_) => Error::UnsupportedRegime(format!(
            "tail index {} ≤ 1 and {model} carries no decay constants",
            consts.alpha
        )),
        other => other,
    })
}

/// [`select_threshold`] with explicitly supplied decay constants.
pub fn select_threshold_with(
    eps: f64,
    consts: &TailBoundConstants,
    decay: Option<DecayConstants>,
) -> Result<ThresholdChoice> {
    let floor = consts.tau1_floor();
    let tau1 = if consts.alpha > 1.0 {
        Some(tau1_eps(eps, consts, floor)?)
    } else {
        None
    };
    let tau2 = match decay {
        Some(d) => Some(tau2_eps(eps, consts, d.gamma1, d.gamma2, d.tau2.max(floor))?),
        None => None,
    };
    let pick = |tau, rule| ThresholdChoice { tau, rule, tau1, tau2 };
    match (tau1, tau2) {
        (Some(t1), Some(t2)) if t1 <= t2 => Ok(pick(t1, ThresholdRule::Tau1)),
        (_, Some(t2)) => Ok(pick(t2, ThresholdRule::Tau2)),
        (Some(t1), None) => Ok(pick(t1, ThresholdRule::Tau1)),
        (None, None) => Err(Error::UnsupportedRegime(format!(
            "tail index {} ≤ 1 and no decay constants were supplied",
            consts.alpha
        ))),
    }
}

/// Monte-Carlo estimate of `‖E[clip(G(x; ξ), τ)] − ∇f(x)‖` at one point.
pub fn estimate_bias_at_point<P: SmoothPart + ?Sized>(
    oracle: &mut NoisyGradientOracle<'_, P>,
    x: &[f64],
    tau: f64,
    n_samples: usize,
) -> Result<f64> {
    check_tau(tau)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let problem = oracle.problem();
    if x.len() != problem.dim() {
        return Err(Error::InvalidInput("point has the wrong dimension".into()));
    }
    let grad = problem.gradient(x);
    let mut g = vec![0.0; grad.len()];
    let mut mean = vec![0.0; grad.len()];
    for s in 0..n_samples {
        oracle.sample(x, &grad, &mut g);
        clip_inf_in_place(&mut g, tau);
        let w = 1.0 / (s + 1) as f64;
        for (m, gi) in mean.iter_mut().zip(&g) {
            *m += (gi - *m) * w;
        }
    }
    Ok(dist2(&mean, &grad))
}

/// Probe points for [`estimate_delta`]: `current` followed by `count`
/// uniform points of the box.
pub fn default_probes<R: Rng + ?Sized>(
    reg: &BoxL1,
    current: &[f64],
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut probes = vec![current.to_vec()];
    for _ in 0..count {
        probes.push(
            reg.lower()
                .iter()
                .zip(reg.upper())
                .map(|(l, u)| if l == u { *l } else { rng.random_range(*l..=*u) })
                .collect(),
        );
    }
    probes
}

/// Largest point estimate of the clipping bias over `probes`; a lower
/// estimate of `Δ(τ)`, the supremum over the domain.
pub fn estimate_delta<P: SmoothPart + ?Sized>(
    oracle: &mut NoisyGradientOracle<'_, P>,
    probes: &[Vec<f64>],
    tau: f64,
    n_samples: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in probes {
        worst = worst.max(estimate_bias_at_point(oracle, x, tau, n_samples)?);
    }
    Ok(worst)
}

/// Membership test for `T(ε) = {τ ≥ τ₍₁₎ : Δ(τ) ≤ ε}` given a `Δ` estimate.
/// Diagnostic only.
pub fn threshold_admissible(delta_estimate: f64, tau: f64, tau1_floor: f64, eps: f64) -> bool {
    tau >= tau1_floor && delta_estimate <= eps
}
