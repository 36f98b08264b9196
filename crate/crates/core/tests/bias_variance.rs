use rand::Rng;
use spgm_core::biasvar::{
    decay_bounds, estimate_bias_at_point, estimate_bias_variance, lemma31_bias_bound,
    lemma31_bias_bound_with, lemma31_var_bound, sigma_sq, tail_asymmetry, truncated_mean,
    TailBoundConstants,
};
use spgm_core::noise::{Density, NoiseModel, NoisyGradientOracle};
use spgm_core::problems::{CompositeProblem, QuadBox, SmoothPart};
use spgm_core::quad::integrate;
use spgm_core::rng::{stream, Lane};

const N: usize = 1_000_000;

/// Mean-zero density with different tails on the two sides:
/// `0.75 z^{-2.5}` for `z ≥ 1` and `2.25 |z|^{-3}` for `z ≤ −1.5`.
struct Lopsided;

impl Density for Lopsided {
    fn pdf(&self, z: f64) -> f64 {
        if z >= 1.0 {
            0.75 * z.powf(-2.5)
        } else if z <= -1.5 {
            2.25 * z.abs().powi(-3)
        } else {
            0.0
        }
    }
}

impl Lopsided {
    fn sample<R: Rng>(rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        if rng.random::<bool>() {
            u.powf(-1.0 / 1.5)
        } else {
            -1.5 * u.powf(-0.5)
        }
    }
}

/// Exact `E[Π_{[-τ,τ]}(a + ζ)] − a` and `E[(Π_{[-τ,τ]}(a + ζ) − a)²]` by quadrature.
fn clipped_moments(d: &dyn Density, a: f64, tau: f64) -> (f64, f64) {
    let dev = |z: f64| (a + z).clamp(-tau, tau) - a;
    let breaks = [f64::NEG_INFINITY, -tau - a, -1.5, -1.0, 0.0, 1.0, 1.5, tau - a, f64::INFINITY];
    let mut first = 0.0;
    let mut second = 0.0;
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    for w in pts.windows(2) {
        first += integrate(|z| dev(z) * d.pdf(z), w[0], w[1], 1e-11);
        second += integrate(|z| dev(z).powi(2) * d.pdf(z), w[0], w[1], 1e-11);
    }
    (first, second)
}

#[test]
fn lemma31_dominates_monte_carlo_on_the_grid() {
    let models = [
        NoiseModel::pareto_sym(0.5).unwrap(),
        NoiseModel::pareto_sym(1.5).unwrap(),
        NoiseModel::cauchy(),
    ];
    let mut cell = 0;
    for model in models {
        let consts = TailBoundConstants::from_model(&model, 0.0, 1).unwrap();
        for a in [0.0f64, 1.0] {
            for tau in [consts.z1 + a.abs() + 1.0, 10.0, 50.0] {
                let mut rng = stream(2025, Lane::Estimation, cell);
                cell += 1;
                let e = estimate_bias_variance(&model, a, tau, N, &mut rng).unwrap();
                let b = lemma31_bias_bound(&consts, &model, a, tau).unwrap();
                let v = lemma31_var_bound(&consts, a, tau).unwrap();
                assert!(e.bias_hat <= b + 3.0 * e.stderr_bias, "{model} a={a} τ={tau}: {e:?} vs {b}");
                assert!(e.var_hat <= v + 3.0 * e.stderr_var, "{model} a={a} τ={tau}: {e:?} vs {v}");
            }
        }
    }
}

#[test]
fn lopsided_density_is_normalized_and_centered() {
    let mass = integrate(|z| Lopsided.pdf(z), f64::NEG_INFINITY, -1.5, 1e-12)
        + integrate(|z| Lopsided.pdf(z), 1.0, f64::INFINITY, 1e-12);
    assert!((mass - 1.0).abs() < 1e-9);
    let mean = integrate(|z| z * Lopsided.pdf(z), -1e9, -1.5, 1e-12)
        + integrate(|z| z * Lopsided.pdf(z), 1.0, 1e9, 1e-12);
    // the tails beyond 1e9 carry O(1e-4.5) mass-weighted mean on each side
    assert!(mean.abs() < 1e-3, "{mean}");
}

#[test]
fn decay_quantities_match_closed_form_and_bounds() {
    let m = 2.25 / 1.5f64.sqrt();
    for tau in [5.0f64, 20.0, 80.0] {
        let tm = truncated_mean(&Lopsided, tau);
        let ta = tail_asymmetry(&Lopsided, tau);
        assert!((tm - (2.25 / tau - 1.5 / tau.sqrt())).abs() < 1e-8, "τ={tau}: {tm}");
        assert!((ta - (0.5 / tau.sqrt() - 1.125 / tau)).abs() < 1e-8, "τ={tau}: {ta}");
        let (b1, b2) = decay_bounds(m, 1.5, tau).unwrap();
        assert!(tm.abs() <= b1 && ta.abs() <= b2);
    }
    // symmetric density: the truncated mean vanishes identically
    let d = NoiseModel::pareto_sym(1.5).unwrap().density().unwrap();
    assert_eq!(truncated_mean(&d, 20.0), 0.0);
    assert!(decay_bounds(1.0, 0.9, 5.0).is_err());
}

#[test]
fn lemma31_bias_bound_covers_lopsided_noise() {
    let alpha = 1.35;
    let m1 = 0.5 * 1.5 / (1.5 - alpha) + 0.5 * 1.5f64.powf(alpha) * 2.0 / (2.0 - alpha);
    let m2 = f64::max(0.75, 2.25 * 1.5f64.powf(-(3.0 - alpha - 1.0)));
    let consts = TailBoundConstants::new(alpha, m1, m2, 1.0, 0.0, 1).unwrap();
    for (i, (a, tau)) in [(0.0, 5.0), (1.0, 5.0), (1.0, 20.0), (-2.0, 40.0)].into_iter().enumerate() {
        let (bias, var) = clipped_moments(&Lopsided, a, tau);
        let bb = lemma31_bias_bound_with(&consts, &Lopsided, a, tau).unwrap();
        let vb = lemma31_var_bound(&consts, a, tau).unwrap();
        assert!(bias.abs() <= bb, "a={a} τ={tau}: {bias} vs {bb}");
        assert!(var <= vb, "a={a} τ={tau}: {var} vs {vb}");
        // the sampler agrees with the quadrature
        let mut rng = stream(12, Lane::Estimation, i as u64);
        let mean: f64 = (0..200_000)
            .map(|_| (a + Lopsided::sample(&mut rng)).clamp(-tau, tau) - a)
            .sum::<f64>()
            / 200_000.0;
        assert!((mean - bias).abs() < 5.0 * (var / 200_000.0).sqrt());
    }
}

#[test]
fn cauchy_bias_bound_exceeds_exact_bias() {
    let model = NoiseModel::cauchy();
    let consts = TailBoundConstants::from_model(&model, 0.0, 1).unwrap();
    let d = model.density().unwrap();
    let (bias, _) = clipped_moments(&d, 1.0, 20.0);
    let bound = lemma31_bias_bound(&consts, &model, 1.0, 20.0).unwrap();
    assert!(bound > 0.0);
    assert!(bias.abs() <= bound, "{bias} vs {bound}");
}

#[test]
fn gaussian_variance_at_large_threshold() {
    let model = NoiseModel::gaussian(1.0).unwrap();
    let (_, exact) = clipped_moments(&model.density().unwrap(), 0.0, 100.0);
    assert!((exact - 1.0).abs() < 1e-9);
    let mut rng = stream(13, Lane::Estimation, 0);
    let e = estimate_bias_variance(&model, 0.0, 100.0, 100_000, &mut rng).unwrap();
    assert!((e.var_hat - exact).abs() <= 3.0 * e.stderr_var, "{e:?}");
}

#[test]
fn var_bound_is_monotone_at_zero_offset() {
    let mut rng = stream(14, Lane::Auxiliary, 0);
    for _ in 0..1000 {
        let alpha = rng.random_range(0.05..1.99);
        let c = TailBoundConstants::new(
            alpha,
            rng.random_range(0.01..10.0),
            rng.random_range(0.01..10.0),
            rng.random_range(0.1..5.0),
            0.0,
            1,
        )
        .unwrap();
        let t1 = c.z1 + rng.random_range(0.0..50.0);
        let t2 = t1 + rng.random_range(0.0..50.0);
        assert!(lemma31_var_bound(&c, 0.0, t2).unwrap() >= lemma31_var_bound(&c, 0.0, t1).unwrap());
    }
}

#[test]
fn sigma_sq_dominates_clipped_gradient_error() {
    let p = QuadBox::new(vec![0.8, -0.3, 0.1], 1.0, 0.0, 1.0).unwrap();
    let uf = p.grad_sup_bound();
    let x = [-1.0, 1.0, 0.4];
    let grad = p.gradient(&x);
    let models = [
        NoiseModel::pareto_sym(0.5).unwrap(),
        NoiseModel::pareto_sym(1.5).unwrap(),
        NoiseModel::cauchy(),
    ];
    let mut cell = 0;
    for model in models {
        let consts = TailBoundConstants::from_model(&model, uf, 3).unwrap();
        for tau in [5.0, 20.0, 80.0] {
            let mut rng = stream(15, Lane::Estimation, cell);
            cell += 1;
            let n = N / 3;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let e: f64 = grad
                    .iter()
                    .map(|g| ((g + model.sample(&mut rng)).clamp(-tau, tau) - g).powi(2))
                    .sum();
                sum += e;
                sum_sq += e * e;
            }
            let mean = sum / n as f64;
            let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
            let s = sigma_sq(tau, &consts).unwrap();
            assert!(mean <= s + 3.0 * se, "{model} τ={tau}: {mean} vs {s}");
        }
    }
}

#[test]
fn point_bias_matches_per_coordinate_quadrature() {
    let p = QuadBox::new(vec![3.0, -4.0, 0.5, 1.0], 2.0, 0.0, 10.0).unwrap();
    let x = [10.0, 10.0, -10.0, 0.0];
    let grad = p.gradient(&x);
    let model = NoiseModel::pareto_sym(1.5).unwrap();
    let d = model.density().unwrap();
    let tau = 100.0;
    let mut bias_sq = 0.0;
    let mut var_sum = 0.0;
    for g in &grad {
        let (b, second) = clipped_moments(&d, *g, tau);
        bias_sq += b * b;
        var_sum += second - b * b;
    }
    let n = 200_000;
    let mut oracle = NoisyGradientOracle::new(&p, model, stream(16, Lane::Estimation, 0));
    let est = estimate_bias_at_point(&mut oracle, &x, tau, n).unwrap();
    assert!(est <= bias_sq.sqrt() + 3.0 * (var_sum / n as f64).sqrt(), "{est}");
}
