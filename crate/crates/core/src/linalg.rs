//! Vector primitives, coordinate-wise clipping and the proximal operator of
//! the box-constrained ℓ1 regularizer.
//!
//! Vectors are plain `f64` slices. Public entry points reject non-finite
//! input; the `*_into` variants used inside solver loops assume the caller
//! already guarantees finiteness.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Euclidean distance ‖a − b‖.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{what}: coordinate {i} is not finite ({})",
            v[i]
        ))),
        None => Ok(()),
    }
}

fn check_threshold(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "clipping threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(())
}

/// Projection onto the ℓ∞ ball of radius `tau`: every coordinate is clamped
/// to `[-tau, tau]`. `tau = 0` yields the zero vector and `tau = ∞` is the
/// identity.
pub fn clip_inf(g: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_threshold(tau)?;
    check_finite(g, "clip_inf")?;
    let mut out = g.to_vec();
    clip_inf_in_place(&mut out, tau);
    Ok(out)
}

/// In-place variant of [`clip_inf`]. Infinite coordinates saturate at ±tau.
pub fn clip_inf_in_place(g: &mut [f64], tau: f64) {
    for v in g.iter_mut() {
        *v = v.clamp(-tau, tau);
    }
}

/// Scalar soft-thresholding `sign(v)·max(|v| − t, 0)`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::InvalidRegularizer(format!(
            "bound lengths differ: {} vs {}",
            lower.len(),
            upper.len()
        )));
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if l.is_nan() || u.is_nan() || l > u {
            return Err(Error::InvalidRegularizer(format!(
                "lower bound exceeds upper bound at coordinate {i}: {l} > {u}"
            )));
        }
    }
    Ok(())
}

/// Euclidean projection onto the box `[lower, upper]`.
pub fn project_box(x: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    check_bounds(lower, upper)?;
    if x.len() != lower.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: x has {} entries, box has {}",
            x.len(),
            lower.len()
        )));
    }
    check_finite(x, "project_box")?;
    Ok(x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(v, (l, u))| v.clamp(*l, *u))
        .collect())
}

/// `h(x) = λ‖x‖₁ + ι_{[l,u]}(x)`.
///
/// With `λ > 0` the box must contain the origin, which is what makes the
/// prox separable as clamp ∘ soft-threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxL1 {
    lambda: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxL1 {
    pub fn new(lambda: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidRegularizer(format!(
                "ℓ1 weight must be finite and nonnegative, got {lambda}"
            )));
        }
        check_bounds(&lower, &upper)?;
        if lower.iter().chain(&upper).any(|b| !b.is_finite()) {
            return Err(Error::InvalidRegularizer(
                "box bounds must be finite so the domain is bounded".into(),
            ));
        }
        if lambda > 0.0 {
            if let Some(i) = lower
                .iter()
                .zip(&upper)
                .position(|(l, u)| *l > 0.0 || *u < 0.0)
            {
                return Err(Error::InvalidRegularizer(format!(
                    "λ > 0 requires 0 ∈ [l, u], violated at coordinate {i}: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self {
            lambda,
            lower,
            upper,
        })
    }

    /// The experiment regularizer: `λ‖x‖₁` on `[-bound, bound]ⁿ`.
    pub fn symmetric(n: usize, lambda: f64, bound: f64) -> Result<Self> {
        Self::new(lambda, vec![-bound; n], vec![bound; n])
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// `D_h = ‖u − l‖`.
    pub fn diameter(&self) -> f64 {
        dist2(&self.upper, &self.lower)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v.is_finite() && *l <= *v && *v <= *u)
    }

    /// `λ‖x‖₁`. The indicator part is not evaluated; callers keep `x` feasible.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.lambda * norm1(x)
    }

    /// `prox_{ηh}(x) = clamp(soft_threshold(x, ηλ), l, u)` coordinate-wise.
    pub fn prox(&self, x: &[f64], eta: f64) -> Result<Vec<f64>> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prox step must be positive, got {eta}"
            )));
        }
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: x has {} entries, regularizer has {}",
                x.len(),
                self.dim()
            )));
        }
        check_finite(x, "prox")?;
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, eta, &mut out);
        Ok(out)
    }

    pub fn prox_into(&self, x: &[f64], eta: f64, out: &mut [f64]) {
        let shrink = eta * self.lambda;
        for (i, o) in out.iter_mut().enumerate() {
            *o = soft_threshold(x[i], shrink).clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Exact `dist(0, g + ∂h(x))` for a feasible `x`, coordinate by
    /// coordinate: the ℓ1 subdifferential plus the box normal cone.
    pub fn subdifferential_distance(&self, x: &[f64], grad: &[f64]) -> f64 {
        let lam = self.lambda;
        let mut acc = 0.0;
        for i in 0..x.len() {
            let (mut lo, mut hi) = if x[i] > 0.0 {
                (lam, lam)
            } else if x[i] < 0.0 {
                (-lam, -lam)
            } else {
                (-lam, lam)
            };
            if x[i] <= self.lower[i] {
                lo = f64::NEG_INFINITY;
            }
            if x[i] >= self.upper[i] {
                hi = f64::INFINITY;
            }
            let target = -grad[i];
            let d = if target < lo {
                lo - target
            } else if target > hi {
                target - hi
            } else {
                0.0
            };
            acc += d * d;
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clip_inf(&[1.0, -0.5], 2.0).unwrap(), vec![1.0, -0.5]);
        assert_eq!(clip_inf(&[5.0, -3.0], 2.0).unwrap(), vec![2.0, -2.0]);
        assert_eq!(clip_inf(&[7.0, 9.0], 0.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn clip_rejects_bad_input() {
        assert!(matches!(
            clip_inf(&[1.0, f64::NAN], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            clip_inf(&[f64::INFINITY], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(clip_inf(&[1.0], -1.0).is_err());
    }

    #[test]
    fn clip_with_infinite_threshold_is_identity() {
        let g = [3.0, -1e300, 0.25];
        assert_eq!(clip_inf(&g, f64::INFINITY).unwrap(), g.to_vec());
    }

    #[test]
    fn prox_examples() {
        let reg = BoxL1::new(1.0, vec![-100.0], vec![100.0]).unwrap();
        assert_eq!(reg.prox(&[3.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(reg.prox(&[0.5], 1.0).unwrap(), vec![0.0]);
        assert_eq!(reg.prox(&[200.0], 1.0).unwrap(), vec![100.0]);
    }

    #[test]
    fn prox_boundary_case_matches_grid_search() {
        // minimize |z| + ½(z − 200)² over [−100, 100]
        let obj = |z: f64| z.abs() + 0.5 * (z - 200.0) * (z - 200.0);
        let best = (0..=200_000)
            .map(|i| -100.0 + i as f64 * 1e-3)
            .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
            .unwrap();
        assert!((best - 100.0).abs() < 1e-9);
    }

    #[test]
    fn regularizer_validation() {
        assert!(matches!(
            BoxL1::new(1.0, vec![2.0], vec![1.0]),
            Err(Error::InvalidRegularizer(_))
        ));
        assert!(matches!(
            BoxL1::new(1.0, vec![0.5], vec![1.0]),
            Err(Error::InvalidRegularizer(_))
        ));
        // a box away from the origin is fine without the ℓ1 term
        assert!(BoxL1::new(0.0, vec![0.5], vec![1.0]).is_ok());
        assert!(BoxL1::new(1.0, vec![f64::NEG_INFINITY], vec![1.0]).is_err());
    }

    #[test]
    fn prox_rejects_nonpositive_step() {
        let reg = BoxL1::symmetric(1, 1.0, 1.0).unwrap();
        assert!(reg.prox(&[0.0], 0.0).is_err());
        assert!(reg.prox(&[0.0], -1.0).is_err());
    }

    #[test]
    fn project_box_examples() {
        assert_eq!(project_box(&[5.0], &[-1.0], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(project_box(&[0.3], &[-1.0], &[1.0]).unwrap(), vec![0.3]);
        assert!(project_box(&[0.0], &[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn subdifferential_distance_cases() {
        let reg = BoxL1::new(1.0, vec![-1.0; 4], vec![1.0; 4]).unwrap();
        // interior nonzero, zero, upper face, lower face
        let x = [0.5, 0.0, 1.0, -1.0];
        let g = [-1.0, 0.5, -3.0, 3.0];
        assert_eq!(reg.subdifferential_distance(&x, &g), 0.0);
        let g = [0.0, 2.0, 1.0, -1.0];
        let d = reg.subdifferential_distance(&x, &g);
        // coordinates contribute 1, 1, 2, 2
        assert!((d - (1.0f64 + 1.0 + 4.0 + 4.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn clip_is_nonexpansive(
            a in prop::collection::vec(-1e3f64..1e3, 1..16),
            shift in prop::collection::vec(-1e3f64..1e3, 16),
            tau in 0.0f64..500.0,
        ) {
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let ca = clip_inf(&a, tau).unwrap();
            let cb = clip_inf(&b, tau).unwrap();
            prop_assert!(dist2(&ca, &cb) <= dist2(&a, &b) + 1e-12);
            prop_assert!(norm_inf(&ca) <= tau);
        }

        #[test]
        fn clip_fixes_points_inside_ball(
            g in prop::collection::vec(-10.0f64..10.0, 1..16),
            extra in 0.0f64..5.0,
        ) {
            let tau = norm_inf(&g) + extra;
            prop_assert_eq!(clip_inf(&g, tau).unwrap(), g);
        }

        #[test]
        fn prox_output_is_feasible(
            x in prop::collection::vec(-50.0f64..50.0, 1..8),
            eta in 1e-3f64..10.0,
            lam in 0.0f64..5.0,
            lo in 0.0f64..20.0,
            hi in 0.0f64..20.0,
        ) {
            let n = x.len();
            let reg = BoxL1::new(lam, vec![-lo; n], vec![hi; n]).unwrap();
            let p = reg.prox(&x, eta).unwrap();
            prop_assert!(reg.contains(&p));
        }

        #[test]
        fn projection_is_idempotent(
            x in prop::collection::vec(-50.0f64..50.0, 1..8),
            lo in -10.0f64..0.0,
            width in 0.0f64..20.0,
        ) {
            let n = x.len();
            let l = vec![lo; n];
            let u = vec![lo + width; n];
            let once = project_box(&x, &l, &u).unwrap();
            let twice = project_box(&once, &l, &u).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
