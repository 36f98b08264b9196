//! `bounds`: thresholds, step recipes and iteration bounds for a list of
//! target accuracies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spgm_core::biasvar::{select_threshold_with, sigma_sq, TailBoundConstants, ThresholdRule};
use spgm_core::noise::DecayConstants;
use spgm_core::problems::Convexity;
use spgm_core::solvers::{
    eta_convex, eta_scvx, eta_theta_ncvx, k_bound_convex, k_bound_ncvx, k_bound_scvx,
    ProblemConstants,
};
use spgm_core::Error;

use crate::commands::solve::starting_point;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::instance::Instance;
use crate::output::{ensure_dir, write_csv, write_text};

pub const BOUNDS_FILE: &str = "bounds.csv";
pub const SIGMA_FILE: &str = "sigma_curve.csv";

/// Bounds above this are reported with a warning.
pub const LARGE_BOUND: f64 = 1e9;

/// Largest budget passed to the step recipes as an integer; beyond it the
/// `K^{-1/2}` scaling of the step is applied in floating point.
const EXACT_BUDGET: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub source: String,
    pub eps: f64,
    /// `convex`, `strongly-convex` or `nonconvex`.
    pub theorem: String,
    /// Bias level the threshold has to reach.
    pub accuracy: f64,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau: f64,
    /// `tau1`, `tau2` or `fixed`.
    pub rule: String,
    pub sigma_sq: f64,
    /// `σ²(τ₍₁₎)`, nonconvex bound only.
    pub sigma_sq_floor: Option<f64>,
    pub k_bound: f64,
    /// Step size; the first step of the schedule in the strongly convex case.
    pub eta: f64,
    pub theta: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub source: String,
    pub tau: f64,
    pub sigma_sq: f64,
}

/// Problem and tail constants of one bounds table.
#[derive(Debug, Clone)]
pub struct BoundsInput {
    pub source: String,
    pub consts: ProblemConstants,
    pub tail: TailBoundConstants,
    pub decay: Option<DecayConstants>,
    pub f0: f64,
    pub convexity: Option<Convexity>,
}

/// One input per noise model, or a single hand-supplied one.
pub fn inputs(config: &ExperimentConfig) -> CliResult<Vec<BoundsInput>> {
    let b = &config.bounds;
    let (problem_part, n, f0, convexity) = match b.constants {
        Some(c) => (
            ProblemConstants {
                lf: c.lf,
                mu_f: c.mu_f,
                uf: c.uf,
                dh: c.dh,
                flow: c.flow,
                tau1_floor: f64::NAN,
            },
            c.n,
            c.f0,
            None,
        ),
        None => {
            let instance = Instance::build(config)?;
            let p = instance.problem();
            let f0 = p.objective(&starting_point(p));
            (p.constants(0.0), p.dim(), f0, Some(p.convexity()))
        }
    };
    let with_tail = |source: String, alpha, l1, l2, u1, decay| -> CliResult<BoundsInput> {
        let tail = TailBoundConstants::new(alpha, l1, l2, u1, problem_part.uf, n)?;
        let consts = ProblemConstants {
            tau1_floor: u1 + problem_part.uf,
            ..problem_part
        };
        consts.validate()?;
        Ok(BoundsInput {
            source,
            consts,
            tail,
            decay,
            f0,
            convexity,
        })
    };
    match b.tail {
        Some(t) => {
            let decay = match (t.gamma1, t.gamma2) {
                (None, None) => None,
                (g1, g2) => Some(DecayConstants {
                    gamma1: g1.unwrap_or(0.0),
                    gamma2: g2.unwrap_or(0.0),
                    tau2: t.tau2.unwrap_or(t.u1),
                }),
            };
            Ok(vec![with_tail("custom".into(), t.alpha, t.lambda1, t.lambda2, t.u1, decay)?])
        }
        None => config
            .models()?
            .into_iter()
            .map(|m| {
                let t = m.tail();
                with_tail(m.to_string(), t.working_alpha, t.lambda1, t.lambda2, t.u1, t.decay)
            })
            .collect(),
    }
}

struct Threshold {
    tau: f64,
    tau1: Option<f64>,
    tau2: Option<f64>,
    rule: &'static str,
}

fn threshold(input: &BoundsInput, accuracy: f64, fixed: Option<f64>) -> CliResult<Threshold> {
    if let Some(tau) = fixed {
        return Ok(Threshold {
            tau,
            tau1: None,
            tau2: None,
            rule: "fixed",
        });
    }
    let c = select_threshold_with(accuracy, &input.tail, input.decay)?;
    Ok(Threshold {
        tau: c.tau,
        tau1: c.tau1,
        tau2: c.tau2,
        rule: match c.rule {
            ThresholdRule::Tau1 => "tau1",
            ThresholdRule::Tau2 => "tau2",
        },
    })
}

fn convex_step(k: f64, consts: &ProblemConstants, s: f64) -> CliResult<f64> {
    if k <= EXACT_BUDGET {
        return Ok(eta_convex(k as u64, consts, s)?);
    }
    Ok(eta_convex(EXACT_BUDGET as u64, consts, s)? * (EXACT_BUDGET / k).sqrt())
}

fn ncvx_step(k: f64, consts: &ProblemConstants, s_hat: f64, s_floor: f64, f0: f64) -> CliResult<(f64, f64)> {
    if k <= EXACT_BUDGET {
        return Ok(eta_theta_ncvx(k as u64, consts, s_hat, s_floor, f0)?);
    }
    let (eta, _) = eta_theta_ncvx(EXACT_BUDGET as u64, consts, s_hat, s_floor, f0)?;
    // past the crossover the step is on its K^{-1/2} branch
    let eta = if eta * 4.0 * consts.lf < 1.0 {
        eta * (EXACT_BUDGET / k).sqrt()
    } else {
        eta
    };
    Ok((eta, 4.0 * consts.lf * eta))
}

pub fn rows_for(input: &BoundsInput, eps: f64, fixed_tau: Option<f64>) -> CliResult<Vec<BoundsRow>> {
    let c = &input.consts;
    let mut rows = Vec::new();
    let row = |theorem: &str, accuracy: f64, t: &Threshold, s: f64| BoundsRow {
        source: input.source.clone(),
        eps,
        theorem: theorem.into(),
        accuracy,
        tau1: t.tau1,
        tau2: t.tau2,
        tau: t.tau,
        rule: t.rule.into(),
        sigma_sq: s,
        sigma_sq_floor: None,
        k_bound: f64::NAN,
        eta: f64::NAN,
        theta: None,
        note: String::new(),
    };
    let convex = input.convexity != Some(Convexity::Nonconvex);
    if convex {
        let acc = eps / (2.0 * c.dh);
        let t = threshold(input, acc, fixed_tau)?;
        let s = sigma_sq(t.tau, &input.tail)?;
        let mut r = row("convex", acc, &t, s);
        r.k_bound = k_bound_convex(eps, c, s)?;
        r.eta = convex_step(r.k_bound, c, s)?;
        rows.push(r);
    }
    if convex && c.mu_f > 0.0 {
        let acc = (c.mu_f * eps / 2.0).sqrt();
        let t = threshold(input, acc, fixed_tau)?;
        let s = sigma_sq(t.tau, &input.tail)?;
        let mut r = row("strongly-convex", acc, &t, s);
        r.k_bound = match k_bound_scvx(eps, c, s) {
            Ok(k) => k,
            Err(Error::Degenerate { reason, fallback }) => {
                r.note = reason;
                fallback
            }
            Err(e) => return Err(e.into()),
        };
        r.eta = eta_scvx(0, c.mu_f)?;
        rows.push(r);
    }
    let acc = eps / 32.0;
    let t = threshold(input, acc, fixed_tau)?;
    let s = sigma_sq(t.tau, &input.tail)?;
    let floor = sigma_sq(c.tau1_floor, &input.tail)?;
    let mut r = row("nonconvex", acc, &t, s);
    r.sigma_sq_floor = Some(floor);
    r.k_bound = k_bound_ncvx(eps, c, s, floor, input.f0)?;
    let (eta, theta) = ncvx_step(r.k_bound, c, s, floor, input.f0)?;
    r.eta = eta;
    r.theta = Some(theta);
    rows.push(r);
    for r in &mut rows {
        if r.k_bound > LARGE_BOUND && r.note.is_empty() {
            r.note = "bound exceeds 1e9 iterations".into();
        }
    }
    Ok(rows)
}

pub fn sigma_curve(input: &BoundsInput, taus: Option<&[f64]>) -> CliResult<Vec<SigmaRow>> {
    let default: Vec<f64>;
    let taus = match taus {
        Some(t) => t,
        None => {
            let base = input.consts.tau1_floor;
            default = (0..=30).map(|i| base * 10f64.powf(i as f64 / 10.0)).collect();
            &default
        }
    };
    taus.iter()
        .map(|&tau| {
            Ok(SigmaRow {
                source: input.source.clone(),
                tau,
                sigma_sq: sigma_sq(tau, &input.tail)?,
            })
        })
        .collect()
}

pub struct BoundsOutput {
    pub rows: Vec<BoundsRow>,
    pub curve: Vec<SigmaRow>,
    pub report: String,
}

pub fn compute(config: &ExperimentConfig) -> CliResult<BoundsOutput> {
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for input in inputs(config)? {
        for &eps in &config.bounds.eps {
            rows.extend(rows_for(&input, eps, config.bounds.tau)?);
        }
        curve.extend(sigma_curve(&input, config.bounds.tau_curve.as_deref())?);
    }
    let report = report(&rows);
    Ok(BoundsOutput { rows, curve, report })
}

fn report(rows: &[BoundsRow]) -> String {
    let mut s = String::new();
    let mut last_source = "";
    for r in rows {
        if r.source != last_source {
            writeln!(s, "noise {}", r.source).unwrap();
            writeln!(
                s,
                "  {:<16} {:>10} {:>12} {:>6} {:>12} {:>12} {:>12} {:>10}",
                "theorem", "eps", "tau", "rule", "sigma_sq", "K", "eta", "K ratio"
            )
            .unwrap();
            last_source = &r.source;
        }
        let prev = rows
            .iter()
            .take_while(|p| !std::ptr::eq(*p, r))
            .filter(|p| p.source == r.source && p.theorem == r.theorem)
            .last();
        let ratio = prev.map(|p| format!("{:.4}", r.k_bound / p.k_bound)).unwrap_or_default();
        writeln!(
            s,
            "  {:<16} {:>10.4e} {:>12.5e} {:>6} {:>12.5e} {:>12.5e} {:>12.5e} {:>10}",
            r.theorem, r.eps, r.tau, r.rule, r.sigma_sq, r.k_bound, r.eta, ratio
        )
        .unwrap();
    }
    s
}

pub fn cmd_bounds(config: &ExperimentConfig) -> CliResult<BoundsOutput> {
    let out = compute(config)?;
    for r in &out.rows {
        if r.k_bound > LARGE_BOUND {
            eprintln!(
                "warning: {} bound for {} at eps={} needs {:.3e} iterations",
                r.theorem, r.source, r.eps, r.k_bound
            );
        }
    }
    ensure_dir(&config.out)?;
    let echo = config.echo();
    write_csv(&config.out.join(BOUNDS_FILE), &echo, &out.rows)?;
    write_csv(&config.out.join(SIGMA_FILE), &echo, &out.curve)?;
    write_text(&config.out.join("bounds.txt"), &out.report)?;
    print!("{}", out.report);
    Ok(out)
}
