//! Heavy-tailed noise samplers and the additive noisy-gradient oracle.
//!
//! Each [`NoiseModel`] carries the tail constants used by the clipping
//! bounds. For the symmetric Pareto sampler the α-th moment is infinite, so
//! the constants are stated at the working index `0.9·α`, where every one of
//! them is exact.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problems::SmoothPart;
use crate::rng::StreamRng;

/// Fraction of the nominal tail index at which moment constants are stated.
pub const WORKING_INDEX_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// No noise: `G(x; ξ) = ∇f(x)`.
    Zero,
    /// `Y·U^{-1/α}` with `Y` Rademacher and `U ~ Uniform(0, 1]`.
    ParetoSym { alpha: f64 },
    /// Standard Cauchy.
    Cauchy,
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

/// Constants of the decay condition on the truncated mean and the tail
/// asymmetry: both are bounded by `Γ/τ^α` for `τ ≥ τ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau2: f64,
}

/// Tail constants of a noise model.
///
/// `alpha` is the nominal tail index; `working_alpha`, `lambda1` and
/// `lambda2` satisfy `E|ξ|^{working_alpha} ≤ lambda1` and
/// `p(z) ≤ lambda2·|z|^{-(working_alpha+1)}` for `|z| ≥ u1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub alpha: f64,
    pub working_alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: f64,
    pub decay: Option<DecayConstants>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    tail: TailConstants,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "tail index must lie in (0, 2], got {alpha}"
        )));
    }
    Ok(())
}

fn symmetric_decay(u1: f64) -> Option<DecayConstants> {
    Some(DecayConstants {
        gamma1: 0.0,
        gamma2: 0.0,
        tau2: u1,
    })
}

/// `E|ξ|^p = 1/cos(pπ/2)` for the standard Cauchy law, `p ∈ (0, 1)`.
fn cauchy_abs_moment(p: f64) -> f64 {
    1.0 / (0.5 * p * PI).cos()
}

/// `sup_z z³·φ_σ(z) = 3√3·e^{-3/2}·σ²/√(2π)`, attained at `z = √3·σ`.
fn gaussian_cubic_envelope(sigma: f64) -> f64 {
    3.0 * 3.0f64.sqrt() * (-1.5f64).exp() * sigma * sigma / (2.0 * PI).sqrt()
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            kind: NoiseKind::Zero,
            tail: TailConstants {
                alpha: 2.0,
                working_alpha: 2.0,
                lambda1: 0.0,
                lambda2: 0.0,
                u1: 1.0,
                decay: symmetric_decay(1.0),
            },
        }
    }

    pub fn pareto_sym(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let working = WORKING_INDEX_FRACTION * alpha;
        Ok(Self {
            kind: NoiseKind::ParetoSym { alpha },
            tail: TailConstants {
                alpha,
                working_alpha: working,
                // E|ξ|^β = α/(α − β) for β < α
                lambda1: alpha / (alpha - working),
                lambda2: alpha / 2.0,
                u1: 1.0,
                decay: symmetric_decay(1.0),
            },
        })
    }

    pub fn cauchy() -> Self {
        let working = WORKING_INDEX_FRACTION;
        Self {
            kind: NoiseKind::Cauchy,
            tail: TailConstants {
                alpha: 1.0,
                working_alpha: working,
                lambda1: cauchy_abs_moment(working),
                lambda2: 1.0 / PI,
                u1: 1.0,
                decay: symmetric_decay(1.0),
            },
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian standard deviation must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Gaussian { sigma },
            tail: TailConstants {
                alpha: 2.0,
                working_alpha: 2.0,
                lambda1: sigma * sigma,
                lambda2: gaussian_cubic_envelope(sigma),
                u1: sigma,
                decay: symmetric_decay(sigma),
            },
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn tail(&self) -> &TailConstants {
        &self.tail
    }

    /// Nominal tail index.
    pub fn alpha(&self) -> f64 {
        self.tail.alpha
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NoiseKind::Zero)
    }

    /// Exact density, when the model has one.
    pub fn density(&self) -> Option<ModelDensity> {
        match self.kind {
            NoiseKind::Zero => None,
            kind => Some(ModelDensity(kind)),
        }
    }

    /// One draw. Pareto draws use the sign first, then `U`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Zero => 0.0,
            NoiseKind::ParetoSym { alpha } => pareto_sym_unchecked(alpha, rng),
            NoiseKind::Cauchy => {
                let u: f64 = rng.random();
                (PI * (u - 0.5)).tan()
            }
            NoiseKind::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        for v in out.iter_mut() {
            *v = self.sample(rng);
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NoiseKind::Zero => write!(f, "zero"),
            NoiseKind::ParetoSym { alpha } => write!(f, "pareto-sym:{alpha}"),
            NoiseKind::Cauchy => write!(f, "cauchy"),
            NoiseKind::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    /// Parses `zero`, `cauchy`, `gaussian[:σ]` or `pareto-sym:α`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>, default: Option<f64>| -> Result<f64> {
            match (a, default) {
                (Some(a), _) => a.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("bad numeric argument in noise spec {s:?}"))
                }),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::InvalidParameter(format!(
                    "noise spec {s:?} needs a parameter"
                ))),
            }
        };
        match name {
            "zero" | "none" => Ok(Self::zero()),
            "cauchy" => Ok(Self::cauchy()),
            "gaussian" => Self::gaussian(num(arg, Some(1.0))?),
            "pareto-sym" => Self::pareto_sym(num(arg, None)?),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise kind {other:?}"
            ))),
        }
    }
}

fn pareto_sym_unchecked<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    // random() is uniform on [0, 1), so 1 − u is uniform on (0, 1]
    let u = 1.0 - rng.random::<f64>();
    // saturate instead of overflowing for very small α
    sign * u.powf(-1.0 / alpha).min(f64::MAX)
}

/// `Y·U^{-1/α}`: symmetric Pareto-type draw with `P(|ξ| ≥ τ) = τ^{-α}` for `τ ≥ 1`.
pub fn sample_pareto_sym<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(pareto_sym_unchecked(alpha, rng))
}

/// `n` independent draws from `model`.
pub fn sample_noise_vector<R: Rng + ?Sized>(
    model: &NoiseModel,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut out = vec![0.0; n];
    model.fill(&mut out, rng);
    Ok(out)
}

/// A one-dimensional probability density.
pub trait Density {
    fn pdf(&self, z: f64) -> f64;

    /// `p(z) = p(−z)` for all `z`. Symmetric densities have vanishing
    /// truncated means and tail asymmetry, which callers may use directly.
    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Exact density of a [`NoiseModel`].
#[derive(Debug, Clone, Copy)]
pub struct ModelDensity(NoiseKind);

impl Density for ModelDensity {
    fn pdf(&self, z: f64) -> f64 {
        match self.0 {
            NoiseKind::Zero => unreachable!("zero noise has no density"),
            NoiseKind::ParetoSym { alpha } => {
                let a = z.abs();
                if a < 1.0 {
                    0.0
                } else {
                    0.5 * alpha * a.powf(-(alpha + 1.0))
                }
            }
            NoiseKind::Cauchy => 1.0 / (PI * (1.0 + z * z)),
            NoiseKind::Gaussian { sigma } => {
                let t = z / sigma;
                (-0.5 * t * t).exp() / (sigma * (2.0 * PI).sqrt())
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Source of stochastic gradients for the solvers.
///
/// The solver computes the exact gradient at every point it queries (it needs
/// it for diagnostics) and hands it over so additive oracles do not recompute
/// it.
pub trait StochasticGradient {
    fn dim(&self) -> usize;

    /// Writes one draw of `G(x; ξ)` into `out`.
    fn sample(&mut self, x: &[f64], exact_grad: &[f64], out: &mut [f64]);

    /// The run's random stream, also used for end-of-run draws.
    fn rng(&mut self) -> &mut StreamRng;
}

/// `G(x; ξ) = ∇f(x) + ξ` with i.i.d. coordinates of `ξ` drawn from a
/// [`NoiseModel`]. Successive calls consume successive states of one stream.
pub struct NoisyGradientOracle<'p, P: SmoothPart + ?Sized> {
    problem: &'p P,
    noise: NoiseModel,
    rng: StreamRng,
}

impl<'p, P: SmoothPart + ?Sized> NoisyGradientOracle<'p, P> {
    pub fn new(problem: &'p P, noise: NoiseModel, rng: StreamRng) -> Self {
        Self {
            problem,
            noise,
            rng,
        }
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn noisy_gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let grad = self.problem.gradient(x);
        let mut out = vec![0.0; grad.len()];
        self.sample(x, &grad, &mut out);
        out
    }
}

impl<P: SmoothPart + ?Sized> StochasticGradient for NoisyGradientOracle<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn sample(&mut self, _x: &[f64], exact_grad: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(exact_grad) {
            *o = g + self.noise.sample(&mut self.rng);
        }
    }

    fn rng(&mut self) -> &mut StreamRng {
        &mut self.rng
    }
}
