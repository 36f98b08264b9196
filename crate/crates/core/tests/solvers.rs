use rand::Rng;
use spgm_core::linalg::{dist2, norm2, norm_inf, BoxL1};
use spgm_core::noise::{NoiseModel, NoisyGradientOracle, StochasticGradient};
use spgm_core::problems::{
    make_lasso_box, reference_solve, CompositeProblem, QuadBox, SmoothPart, REFERENCE_TOL,
};
use spgm_core::rng::{stream, Lane, StreamRng};
use spgm_core::solvers::{
    harmonic_bound, harmonic_sum, log_ratio_threshold, min_inverse_plus_linear, run_spgm,
    run_spgm_momentum, stationarity_residual, Algorithm, ClipPlan, SolverConfig, StepRule,
};
use spgm_core::Error;

fn oracle<'p, P: SmoothPart>(p: &'p P, noise: NoiseModel, seed: u64) -> NoisyGradientOracle<'p, P> {
    NoisyGradientOracle::new(p, noise, stream(seed, Lane::GradientNoise, 0))
}

/// Deterministic proximal gradient with the same update order as the solver.
fn prox_gradient<P: CompositeProblem>(p: &P, x0: &[f64], eta: f64, k: usize) -> Vec<Vec<f64>> {
    let reg = p.regularizer();
    let mut xs = vec![x0.to_vec()];
    for _ in 0..k {
        let x = xs.last().unwrap();
        let g = p.gradient(x);
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
        xs.push(reg.prox(&trial, eta).unwrap());
    }
    xs
}

#[test]
fn noiseless_averaging_run_is_proximal_gradient() {
    let p = make_lasso_box(40, 15, 1.0, 100.0, 3).unwrap();
    let eta = 1.0 / p.lipschitz();
    let k = 300;
    let tau = p.grad_sup_bound() + 1.0;
    let cfg = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(eta), ClipPlan::Constant(tau), k)
        .keeping_iterates();
    let traj = run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &cfg).unwrap();
    let reference = prox_gradient(&p, &[0.0; 15], eta, k);
    for (a, b) in traj.iterates.as_ref().unwrap().iter().zip(&reference) {
        assert!(dist2(a, b) <= 1e-12);
    }
    let unclipped = SolverConfig { clip: ClipPlan::Unclipped, ..cfg.clone() };
    let t2 = run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &unclipped).unwrap();
    assert_eq!(t2.iterates, traj.iterates);
}

#[test]
fn exact_gradient_descent_on_a_quadratic() {
    let c: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
    let p = QuadBox::new(c, 1.0, 0.0, 100.0).unwrap();
    let cfg = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(1.0), ClipPlan::Unclipped, 100);
    let traj = run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &cfg).unwrap();
    assert!(norm2(&p.gradient(&traj.x_final)) <= 1e-6);
}

/// Pushes `x` to the top of `[0, 1]` on even calls and to the bottom on odd ones.
struct Alternating {
    calls: usize,
    rng: StreamRng,
}

impl StochasticGradient for Alternating {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&mut self, _x: &[f64], _g: &[f64], out: &mut [f64]) {
        out[0] = if self.calls % 2 == 0 { -10.0 } else { 10.0 };
        self.calls += 1;
    }

    fn rng(&mut self) -> &mut StreamRng {
        &mut self.rng
    }
}

#[test]
fn averages_of_alternating_iterates() {
    let reg = BoxL1::new(0.0, vec![0.0], vec![1.0]).unwrap();
    let p = QuadBox::with_regularizer(vec![0.5], 1.0, reg).unwrap();
    let cfg = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(1.0), ClipPlan::Unclipped, 40)
        .keeping_iterates();
    let mut o = Alternating { calls: 0, rng: stream(0, Lane::GradientNoise, 0) };
    let traj = run_spgm(&p, &mut o, &cfg).unwrap();
    let z = traj.averages.unwrap();
    for m in 1..=20 {
        assert_eq!(z[2 * m - 1][0], 0.5);
    }
}

#[test]
fn averaging_identity_and_feasibility() {
    let p = make_lasso_box(30, 8, 0.5, 2.0, 4).unwrap();
    for (i, noise) in [NoiseModel::pareto_sym(0.6).unwrap(), NoiseModel::cauchy()].into_iter().enumerate() {
        let cfg = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(1e-3), ClipPlan::Constant(50.0), 500)
            .keeping_iterates();
        let traj = run_spgm(&p, &mut oracle(&p, noise, i as u64), &cfg).unwrap();
        let xs = traj.iterates.unwrap();
        let zs = traj.averages.unwrap();
        let mut sum = [0.0; 8];
        for k in 0..500 {
            assert!(p.regularizer().contains(&xs[k + 1]));
            for (s, v) in sum.iter_mut().zip(&xs[k + 1]) {
                *s += v;
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / (k + 1) as f64).collect();
            assert!(dist2(&zs[k], &mean) <= 1e-12 * (k + 1) as f64);
        }
    }
}

#[test]
fn momentum_with_unit_weight_uses_fresh_gradients() {
    let p = QuadBox::new(vec![1.0, -1.0, 0.5], 1.0, 0.0, 10.0).unwrap();
    let noise = NoiseModel::pareto_sym(1.2).unwrap();
    let cfg = SolverConfig::new(Algorithm::SpgmMomentum, StepRule::Constant(0.1), ClipPlan::Constant(3.0), 50)
        .with_theta(1.0)
        .keeping_iterates();
    let traj = run_spgm_momentum(&p, &mut oracle(&p, noise, 7), &cfg).unwrap();
    // replay the oracle: m^k is the clipped draw at x^k
    let mut o = oracle(&p, noise, 7);
    let xs = traj.iterates.unwrap();
    for (x, m) in xs.iter().zip(traj.momenta.unwrap()) {
        let g = p.gradient(x);
        let mut draw = vec![0.0; 3];
        o.sample(x, &g, &mut draw);
        let clipped: Vec<f64> = draw.iter().map(|v| v.clamp(-3.0, 3.0)).collect();
        assert_eq!(m, clipped);
    }
}

#[test]
fn noiseless_momentum_stays_on_a_constant_gradient() {
    // λ = 0 and f with constant gradient along the run: x stays put at a box
    // face and m stays equal to ∇f
    let reg = BoxL1::new(0.0, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let p = QuadBox::with_regularizer(vec![5.0, 5.0], 1.0, reg).unwrap();
    let x0 = vec![1.0, 1.0];
    let cfg = SolverConfig::new(Algorithm::SpgmMomentum, StepRule::Constant(0.1), ClipPlan::Unclipped, 30)
        .with_theta(0.25)
        .with_x0(x0.clone())
        .keeping_iterates();
    let traj = run_spgm_momentum(&p, &mut oracle(&p, NoiseModel::zero(), 0), &cfg).unwrap();
    let g = p.gradient(&x0);
    for m in traj.momenta.unwrap() {
        assert_eq!(m, g);
    }
    // P_k = f(x^k) exactly
    for row in &traj.rows {
        assert_eq!(row.potential.unwrap(), p.value(&x0));
    }
}

#[test]
fn momentum_is_bounded_by_the_thresholds() {
    let p = make_lasso_box(30, 8, 1.0, 5.0, 8).unwrap();
    let taus: Vec<f64> = (0..=400).map(|k| 1.0 + (k % 7) as f64).collect();
    let tau_max = 7.0;
    let cfg = SolverConfig::new(
        Algorithm::SpgmMomentum,
        StepRule::Constant(1e-3),
        ClipPlan::PerIteration(taus),
        400,
    )
    .with_theta(0.2)
    .keeping_iterates();
    let traj = run_spgm_momentum(&p, &mut oracle(&p, NoiseModel::cauchy(), 1), &cfg).unwrap();
    for (x, m) in traj.iterates.unwrap().iter().zip(traj.momenta.unwrap()) {
        assert!(norm_inf(&m) <= tau_max);
        assert!(p.regularizer().contains(x));
    }
    let idx = traj.selected_index.unwrap();
    assert!((1..=400).contains(&idx));
}

#[test]
fn potential_equals_objective_without_noise_and_memory() {
    let p = make_lasso_box(20, 5, 1.0, 10.0, 2).unwrap();
    let cfg = SolverConfig::new(Algorithm::SpgmMomentum, StepRule::Constant(1e-3), ClipPlan::Unclipped, 20)
        .with_theta(1.0)
        .keeping_iterates();
    let traj = run_spgm_momentum(&p, &mut oracle(&p, NoiseModel::zero(), 0), &cfg).unwrap();
    for (row, x) in traj.rows.iter().zip(traj.iterates.unwrap()) {
        assert_eq!(row.potential.unwrap(), p.value(&x));
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let p = make_lasso_box(30, 10, 1.0, 100.0, 9).unwrap();
    let noise = NoiseModel::pareto_sym(0.5).unwrap();
    for algo in [Algorithm::Spgm, Algorithm::SpgmMomentum] {
        let cfg = SolverConfig::new(algo, StepRule::Constant(1e-4), ClipPlan::Constant(10.0), 200)
            .with_theta(0.05);
        let run = |cfg: &SolverConfig| match algo {
            Algorithm::Spgm => run_spgm(&p, &mut oracle(&p, noise, 42), cfg).unwrap(),
            Algorithm::SpgmMomentum => run_spgm_momentum(&p, &mut oracle(&p, noise, 42), cfg).unwrap(),
        };
        assert_eq!(run(&cfg), run(&cfg));
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let p = QuadBox::new(vec![0.0; 3], 1.0, 0.0, 1.0).unwrap();
    let base = SolverConfig::new(Algorithm::Spgm, StepRule::Constant(0.1), ClipPlan::Constant(1.0), 10);
    let outside = base.clone().with_x0(vec![2.0, 0.0, 0.0]);
    assert!(matches!(
        run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &outside),
        Err(Error::InvalidStart(_))
    ));
    let momentum = SolverConfig { algo: Algorithm::SpgmMomentum, theta: 0.0, ..base.clone() };
    assert!(run_spgm_momentum(&p, &mut oracle(&p, NoiseModel::zero(), 0), &momentum).is_err());
    let zero_k = SolverConfig { iterations: 0, ..base.clone() };
    assert!(run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &zero_k).is_err());
    let wrong_algo = SolverConfig { algo: Algorithm::SpgmMomentum, ..base };
    assert!(run_spgm(&p, &mut oracle(&p, NoiseModel::zero(), 0), &wrong_algo).is_err());
}

#[test]
fn residual_vanishes_at_a_solved_box_qp() {
    // closed form: the solution is the projection of c; the KKT residual is 0
    let c = vec![2.0, -0.5, 0.25, -3.0];
    let p = QuadBox::new(c, 1.0, 0.0, 1.0).unwrap();
    let sol = reference_solve(&p, REFERENCE_TOL).unwrap();
    let exact = p.minimizer();
    let eta = 0.5;
    let g = p.gradient(&sol.x);
    let trial: Vec<f64> = sol.x.iter().zip(&g).map(|(x, gi)| x - eta * gi).collect();
    let x_next = p.regularizer().prox(&trial, eta).unwrap();
    let r = stationarity_residual(&x_next, &sol.x, &g, eta, &p.gradient(&x_next)).unwrap();
    assert!(r <= 1e-6);
    assert!(p.regularizer().subdifferential_distance(&exact, &p.gradient(&exact)) <= 1e-12);
}

#[test]
fn harmonic_bound_holds() {
    for k in [1, 2, 10, 1_000, 1_000_000] {
        assert!(harmonic_sum(k) <= harmonic_bound(k), "K={k}");
    }
}

#[test]
fn log_ratio_lemma_holds() {
    let mut rng = stream(20, Lane::Auxiliary, 0);
    let upper = (-1.0f64).exp() - 1e-3;
    for _ in 0..1000 {
        let u = rng.random_range(1e-6..upper);
        for scale in [1.0, 1.5, 10.0] {
            let v = scale * log_ratio_threshold(u);
            assert!(v.ln() / v <= 2.0 * u, "u={u} v={v}");
        }
    }
}

#[test]
fn inverse_plus_linear_lemma_holds() {
    let mut rng = stream(21, Lane::Auxiliary, 0);
    for _ in 0..10_000 {
        let a = rng.random_range(1e-3..1e3);
        let b = rng.random_range(1e-3..1e3);
        let c = rng.random_range(1e-3..1e2);
        let (t, value) = min_inverse_plus_linear(a, b, c);
        assert!(t > 0.0 && t <= c);
        assert!(value <= (a / c + 2.0 * (a * b).sqrt()) * (1.0 + 1e-12));
        for i in 1..=1000 {
            let s = c * i as f64 / 1000.0;
            assert!(value <= (a / s + b * s) * (1.0 + 1e-12));
        }
    }
}
