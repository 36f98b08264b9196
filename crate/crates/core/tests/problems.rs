use rand::Rng;
use spgm_core::linalg::{dist2, norm_inf, BoxL1};
use spgm_core::problems::{
    make_lasso_box, make_robust_regression, CompositeProblem, LassoBox, Matrix, QuadBox,
    SmoothPart,
};
use spgm_core::rng::{stream, Lane, StreamRng};

fn random_point(reg: &BoxL1, rng: &mut StreamRng) -> Vec<f64> {
    reg.lower()
        .iter()
        .zip(reg.upper())
        .map(|(l, u)| rng.random_range(*l..=*u))
        .collect()
}

fn finite_difference(p: &dyn SmoothPart, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + x[i].abs());
            y[i] = x[i] + h;
            let up = p.value(&y);
            y[i] = x[i] - h;
            let down = p.value(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative agreement with central differences. The objective values of
/// the lasso instance are O(1e6) at the box scale, so the comparison is
/// scaled by the gradient magnitude.
fn check_gradient(p: &dyn SmoothPart, x: &[f64], abs_tol: f64) {
    let g = p.gradient(x);
    let fd = finite_difference(p, x);
    let err = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= abs_tol * (1.0 + norm_inf(&g)), "gradient error {err}");
}

#[test]
fn lasso_gradient_matches_finite_differences() {
    let p = make_lasso_box(30, 12, 1.0, 100.0, 5).unwrap();
    let mut rng = stream(1, Lane::Auxiliary, 0);
    for _ in 0..10 {
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        check_gradient(&p, &x, 1e-5);
    }
}

#[test]
fn robust_gradient_matches_finite_differences() {
    let p = make_robust_regression(30, 12, 1.0, 100.0, 6).unwrap();
    let mut rng = stream(2, Lane::Auxiliary, 0);
    for _ in 0..10 {
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        check_gradient(&p, &x, 1e-5);
    }
}

#[test]
fn lipschitz_constants_hold_on_random_pairs() {
    let lasso = make_lasso_box(200, 100, 1.0, 100.0, 0).unwrap();
    let robust = make_robust_regression(200, 100, 1.0, 100.0, 0).unwrap();
    let mut rng = stream(3, Lane::Auxiliary, 0);
    let problems: [(&dyn CompositeProblem, f64); 2] = [(&lasso, 1.01), (&robust, 1.0)];
    for (p, slack) in problems {
        let reg = p.regularizer();
        for _ in 0..100 {
            let x = random_point(reg, &mut rng);
            let y = random_point(reg, &mut rng);
            let dg = dist2(&p.gradient(&x), &p.gradient(&y));
            assert!(dg <= slack * p.lipschitz() * dist2(&x, &y));
        }
        // pairs near the origin probe the curvature of φ at zero residual
        for _ in 0..100 {
            let x: Vec<f64> = (0..reg.dim()).map(|_| rng.random_range(-0.1..0.1)).collect();
            let y: Vec<f64> = (0..reg.dim()).map(|_| rng.random_range(-0.1..0.1)).collect();
            let dg = dist2(&p.gradient(&x), &p.gradient(&y));
            assert!(dg <= slack * p.lipschitz() * dist2(&x, &y));
        }
    }
}

#[test]
fn gradient_sup_bounds_hold() {
    let lasso = make_lasso_box(200, 100, 1.0, 100.0, 1).unwrap();
    let robust = make_robust_regression(200, 100, 1.0, 100.0, 1).unwrap();
    let quad = QuadBox::random(100, 1.0, 0.0, 100.0, 1).unwrap();
    let mut rng = stream(4, Lane::Auxiliary, 0);
    let problems: [&dyn CompositeProblem; 3] = [&lasso, &robust, &quad];
    for p in problems {
        let uf = p.grad_sup_bound();
        for _ in 0..1000 {
            let x = random_point(p.regularizer(), &mut rng);
            assert!(norm_inf(&p.gradient(&x)) <= uf);
        }
        // box corners are where the lasso bound is tightest
        let corner: Vec<f64> = p.regularizer().upper().to_vec();
        assert!(norm_inf(&p.gradient(&corner)) <= uf);
    }
}

#[test]
fn objectives_respect_their_lower_bounds() {
    let lasso = make_lasso_box(40, 10, 1.0, 100.0, 2).unwrap();
    let robust = make_robust_regression(40, 10, 1.0, 100.0, 2).unwrap();
    let mut rng = stream(5, Lane::Auxiliary, 0);
    for _ in 0..1000 {
        let x = random_point(lasso.regularizer(), &mut rng);
        assert!(lasso.value(&x) >= 0.0);
        assert!(lasso.objective(&x) >= lasso.lower_bound());
        let fr = robust.value(&x);
        assert!((0.0..40.0).contains(&fr));
        assert!(robust.objective(&x) >= robust.lower_bound());
    }
}

#[test]
fn default_instance_constants_are_sane() {
    let p = make_lasso_box(200, 100, 1.0, 100.0, 0).unwrap();
    // λ_max(AᵀA) for a 200×100 Gaussian design sits near (√200 + √100)²
    assert!(p.lipschitz() > 400.0 && p.lipschitz() < 700.0, "{}", p.lipschitz());
    assert_eq!(p.regularizer().diameter(), 200.0 * 10.0);
    let c = p.constants(1.0);
    assert_eq!(c.tau1_floor, 1.0 + c.uf);
    assert!(c.validate().is_ok());
}

#[test]
fn identity_design_keeps_the_eigenvalue_exact() {
    let reg = BoxL1::symmetric(4, 0.5, 10.0).unwrap();
    let p = LassoBox::from_parts(Matrix::identity(4), vec![1.0; 4], reg).unwrap();
    assert!((p.lipschitz() - 1.0).abs() < 1e-12);
}
