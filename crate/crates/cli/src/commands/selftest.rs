//! `selftest`: a fast smoke check of the numerical kernels.

use rand::Rng;
use spgm_core::biasvar::{estimate_bias_variance, tau1_eps, tau2_eps, TailBoundConstants};
use spgm_core::linalg::{clip_inf, dist2, BoxL1};
use spgm_core::noise::{sample_pareto_sym, NoiseModel, NoisyGradientOracle};
use spgm_core::problems::QuadBox;
use spgm_core::rng::{stream, Lane};
use spgm_core::solvers::{
    k_bound_convex, k_bound_ncvx, run_spgm, Algorithm, ClipPlan, ProblemConstants, SolverConfig,
    StepRule,
};

use crate::error::{CliError, CliResult};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

pub fn run_checks(seed: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();

    let reg = BoxL1::new(1.0, vec![-100.0], vec![100.0])?;
    let p = reg.prox(&[200.0], 1.0)?[0];
    let q = reg.prox(&[0.5], 1.0)?[0];
    out.push(check("prox", p == 100.0 && q == 0.0, format!("prox(200) = {p}, prox(0.5) = {q}")));

    let mut rng = stream(seed, Lane::Auxiliary, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.random_range(-10.0..10.0)).collect();
        let tau = rng.random_range(0.0..8.0);
        let ratio = dist2(&clip_inf(&a, tau)?, &clip_inf(&b, tau)?) / dist2(&a, &b);
        worst = worst.max(ratio);
    }
    out.push(check("clip nonexpansive", worst <= 1.0 + 1e-15, format!("largest ratio {worst}")));

    let mut rng = stream(seed, Lane::Estimation, 0);
    let n = 100_000;
    let hits = (0..n).filter(|_| sample_pareto_sym(0.5, &mut rng).unwrap().abs() >= 4.0).count();
    let frac = hits as f64 / n as f64;
    let se = (0.25 / n as f64).sqrt();
    out.push(check("pareto tail", (frac - 0.5).abs() <= 4.0 * se, format!("P(|ξ| ≥ 4) = {frac}")));

    let mut rng = stream(seed, Lane::Estimation, 1);
    let e = estimate_bias_variance(&NoiseModel::cauchy(), 1.0, 0.0, 1000, &mut rng)?;
    out.push(check(
        "zero threshold",
        e.bias_hat == 1.0 && e.var_hat == 1.0,
        format!("bias {} var {}", e.bias_hat, e.var_hat),
    ));

    let c = TailBoundConstants::new(2.0, 1.0, 1.0, 1.0, 0.0, 1)?;
    let t1 = tau1_eps(0.1, &c, 1.0)?;
    let c = TailBoundConstants::new(0.5, 1.0, 1e-12, 1.0, 0.0, 1)?;
    let t2 = tau2_eps(0.1, &c, 0.5, 0.5, 1.0)?;
    out.push(check("thresholds", close(t1, 60.0) && close(t2, 400.0), format!("τ₁ = {t1}, τ₂ = {t2}")));

    let consts = ProblemConstants {
        lf: 1.0,
        mu_f: 0.0,
        uf: 0.0,
        dh: 1.0,
        flow: 0.0,
        tau1_floor: 1.0,
    };
    let kc = k_bound_convex(0.1, &consts, 1.0)?;
    let kn = k_bound_ncvx(1.0, &consts, 1.0, 0.0, 1.0)?;
    out.push(check(
        "iteration bounds",
        kc == 1000.0 && kn == 65536.0,
        format!("convex {kc}, nonconvex {kn}"),
    ));

    let quad = QuadBox::new(vec![0.5, -2.0, 3.0], 2.0, 0.0, 1.0)?;
    let mut oracle = NoisyGradientOracle::new(&quad, NoiseModel::zero(), stream(seed, Lane::GradientNoise, 0));
    let cfg = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(0.25), ClipPlan::Unclipped, 200);
    let t = run_spgm(&quad, &mut oracle, &cfg)?;
    let err = dist2(&t.x_final, &quad.minimizer());
    out.push(check("noiseless solve", err <= 1e-12, format!("distance to minimizer {err}")));

    Ok(out)
}

pub fn cmd_selftest(seed: u64) -> CliResult<()> {
    let checks = run_checks(seed)?;
    let mut failed = Vec::new();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfTest(failed.join(", ")))
    }
}
