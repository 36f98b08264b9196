//! Step-size recipes and iteration bounds for the clipped solvers.
//!
//! Iteration bounds are returned as integral `f64` values without capping;
//! for small tail indices they can exceed any practical budget.

use super::ProblemConstants;
use crate::error::{Error, Result};

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target accuracy must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

fn check_sigma(s: f64, what: &str) -> Result<()> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be nonnegative, got {s}"
        )));
    }
    Ok(())
}

fn check_iterations(k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("iteration budget must be at least 1".into()));
    }
    Ok(())
}

/// Ceiling that absorbs rounding noise: values within `1e-12` (relative) of
/// an integer snap to it instead of rounding up.
pub fn ceil_snapped(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        v.ceil()
    }
}

/// `D_h / √(2K(L²D_h²/4 + σ²))`.
pub fn eta_convex(k: u64, consts: &ProblemConstants, sigma_sq: f64) -> Result<f64> {
    check_iterations(k)?;
    check_sigma(sigma_sq, "σ²(τ)")?;
    let d = consts.dh;
    let l = consts.lf;
    Ok(d / (2.0 * k as f64 * (l * l * d * d / 4.0 + sigma_sq)).sqrt())
}

/// `2/(μ(k + 1))`.
pub fn eta_scvx(k: u64, mu_f: f64) -> Result<f64> {
    if !(mu_f > 0.0) {
        return Err(Error::UnsupportedRegime(format!(
            "the strongly convex schedule needs μ_f > 0, got {mu_f}"
        )));
    }
    Ok(2.0 / (mu_f * (k as f64 + 1.0)))
}

/// `(η̂, θ̂)` with `η̂ = ¼·min{1/L, √((F(x⁰) − F_low + σ²(τ₍₁₎)/L)/(K·L·σ²(τ̂)))}`
/// and `θ̂ = 4Lη̂ ∈ (0, 1]`.
pub fn eta_theta_ncvx(
    k: u64,
    consts: &ProblemConstants,
    sigma_sq_hat: f64,
    sigma_sq_floor: f64,
    f0: f64,
) -> Result<(f64, f64)> {
    check_iterations(k)?;
    check_sigma(sigma_sq_hat, "σ²(τ̂)")?;
    check_sigma(sigma_sq_floor, "σ²(τ₍₁₎)")?;
    let l = consts.lf;
    let gap = ncvx_gap(consts, sigma_sq_floor, f0)?;
    // σ²(τ̂) = 0 makes the second branch infinite
    let second = (gap / (k as f64 * l * sigma_sq_hat)).sqrt();
    let eta = 0.25 * (1.0 / l).min(second);
    Ok((eta, 4.0 * l * eta))
}

fn ncvx_gap(consts: &ProblemConstants, sigma_sq_floor: f64, f0: f64) -> Result<f64> {
    let gap = f0 - consts.flow;
    if !(gap >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "F(x⁰) = {f0} lies below the lower bound {}",
            consts.flow
        )));
    }
    Ok(gap + sigma_sq_floor / consts.lf)
}

/// `⌈max{8D_h²(L²D_h²/4 + σ²)/ε², 1}⌉`.
pub fn k_bound_convex(eps: f64, consts: &ProblemConstants, sigma_sq: f64) -> Result<f64> {
    check_eps(eps)?;
    check_sigma(sigma_sq, "σ²(τ)")?;
    let d = consts.dh;
    let l = consts.lf;
    let v = 8.0 * d * d * (l * l * d * d / 4.0 + sigma_sq) / (eps * eps);
    Ok(ceil_snapped(v.max(1.0)))
}

/// `⌈max{C ln C, 3}⌉` with `C = 4(L²D_h² + 4σ²)/(μ ε)`.
///
/// When `C ≤ e` the bound's derivation does not apply; the error carries the
/// floor value 3 as a fallback.
pub fn k_bound_scvx(eps: f64, consts: &ProblemConstants, sigma_sq: f64) -> Result<f64> {
    check_eps(eps)?;
    check_sigma(sigma_sq, "σ²(τ)")?;
    let mu = consts.mu_f;
    if !(mu > 0.0) {
        return Err(Error::UnsupportedRegime(format!(
            "the strongly convex bound needs μ_f > 0, got {mu}"
        )));
    }
    let l = consts.lf;
    let d = consts.dh;
    let c = 4.0 * (l * l * d * d + 4.0 * sigma_sq) / (mu * eps);
    k_bound_scvx_from_factor(c)
}

/// The strongly convex bound as a function of its factor `C` alone.
pub fn k_bound_scvx_from_factor(c: f64) -> Result<f64> {
    if c <= std::f64::consts::E {
        return Err(Error::Degenerate {
            reason: format!("C = {c} ≤ e: accuracy too coarse for the strongly convex bound"),
            fallback: 3.0,
        });
    }
    Ok(ceil_snapped((c * c.ln()).max(3.0)))
}

/// `⌈max{1, 512L·G/(3ε²), 256²·L·G·σ²(τ̂)/ε⁴}⌉` with
/// `G = F(x⁰) − F_low + σ²(τ₍₁₎)/L`.
pub fn k_bound_ncvx(
    eps: f64,
    consts: &ProblemConstants,
    sigma_sq_hat: f64,
    sigma_sq_floor: f64,
    f0: f64,
) -> Result<f64> {
    check_eps(eps)?;
    check_sigma(sigma_sq_hat, "σ²(τ̂)")?;
    check_sigma(sigma_sq_floor, "σ²(τ₍₁₎)")?;
    let l = consts.lf;
    let gap = ncvx_gap(consts, sigma_sq_floor, f0)?;
    let second = 512.0 * l * gap / (3.0 * eps * eps);
    let third = 65_536.0 * l * gap * sigma_sq_hat / eps.powi(4);
    Ok(ceil_snapped(second.max(third).max(1.0)))
}

/// `Σ_{k=0}^{K−1} 1/(k + 1)`.
pub fn harmonic_sum(k: u64) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

/// `ln(2K + 1)`, an upper bound on [`harmonic_sum`].
pub fn harmonic_bound(k: u64) -> f64 {
    (2.0 * k as f64 + 1.0).ln()
}

/// `u⁻¹ ln(1/u)`: for `u < 1/e`, every `v` at or above it has `v⁻¹ ln v ≤ 2u`.
pub fn log_ratio_threshold(u: f64) -> f64 {
    (1.0 / u).ln() / u
}

/// Minimizer of `a/t + bt` over `(0, c]`, `t* = min{c, √(a/b)}`, with its
/// value. The value never exceeds `a/c + 2√(ab)`.
pub fn min_inverse_plus_linear(a: f64, b: f64, c: f64) -> (f64, f64) {
    let t = c.min((a / b).sqrt());
    (t, a / t + b * t)
}
