//! Synthetic composite problems `F = f + h` with `h = λ‖x‖₁ + ι_{[l,u]}`.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dist2, dot, norm2, BoxL1};
use crate::rng::{stream, Lane};
use crate::solvers::ProblemConstants;

/// The smooth part `f` of a composite objective.
pub trait SmoothPart: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.gradient_into(x, out);
        self.value(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    StronglyConvex,
    Convex,
    Nonconvex,
}

pub trait CompositeProblem: SmoothPart {
    fn regularizer(&self) -> &BoxL1;

    /// Lipschitz constant of `∇f` over the box.
    fn lipschitz(&self) -> f64;

    /// Strong-convexity modulus of `f`, zero when not strongly convex.
    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// Upper bound on `‖∇f(x)‖∞` over the box.
    fn grad_sup_bound(&self) -> f64;

    /// Lower bound on `F` over the box.
    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn convexity(&self) -> Convexity;

    fn objective(&self, x: &[f64]) -> f64 {
        self.value(x) + self.regularizer().value(x)
    }

    /// Problem constants with the noise-tail onset `u1` folded into `τ₍₁₎`.
    fn constants(&self, u1: f64) -> ProblemConstants {
        let uf = self.grad_sup_bound();
        ProblemConstants {
            lf: self.lipschitz(),
            mu_f: self.strong_convexity(),
            uf,
            dh: self.regularizer().diameter(),
            flow: self.lower_bound(),
            tau1_floor: u1 + uf,
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} matrix entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_t_vec(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
    }

    /// Largest eigenvalue of `AᵀA` by power iteration from the all-ones
    /// vector. The Rayleigh quotient approaches it from below.
    pub fn gram_lambda_max(&self) -> f64 {
        let n = self.cols;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut av = vec![0.0; self.rows];
        let mut w = vec![0.0; n];
        let mut estimate = 0.0;
        for _ in 0..10_000 {
            self.mul_vec(&v, &mut av);
            self.mul_t_vec(&av, &mut w);
            let next = dot(&av, &av);
            let nw = norm2(&w);
            if nw == 0.0 {
                return 0.0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            let converged = (next - estimate).abs() <= 1e-13 * next;
            estimate = next;
            if converged {
                break;
            }
        }
        estimate
    }

    /// `max_j Σ_i |a_ij|`.
    fn max_abs_column_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, a) in sums.iter_mut().zip(self.row(i)) {
                *s += a.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

fn gaussian_data(m: usize, n: usize, seed: u64) -> Result<(Matrix, Vec<f64>)> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "problem dimensions must be positive, got m={m}, n={n}"
        )));
    }
    let mut rng = stream(seed, Lane::ProblemData, 0);
    let a: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok((Matrix::from_row_major(m, n, a)?, b))
}

fn check_data(a: &Matrix, b: &[f64], reg: &BoxL1) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::InvalidInput(format!(
            "target has {} entries, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if reg.dim() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "regularizer dimension {} does not match {} columns",
            reg.dim(),
            a.cols()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("targets must be finite".into()));
    }
    Ok(())
}

/// `f(x) = ½‖Ax − b‖²` over a box with an ℓ1 penalty.
#[derive(Debug, Clone)]
pub struct LassoBox {
    a: Matrix,
    b: Vec<f64>,
    reg: BoxL1,
    seed: Option<u64>,
    lf: f64,
    uf: f64,
}

impl LassoBox {
    pub fn from_parts(a: Matrix, b: Vec<f64>, reg: BoxL1) -> Result<Self> {
        check_data(&a, &b, &reg)?;
        let lf = a.gram_lambda_max().max(f64::MIN_POSITIVE);
        // interval bound on |Aᵀ(Ax − b)| over the box
        let radius: Vec<f64> = reg
            .lower()
            .iter()
            .zip(reg.upper())
            .map(|(l, u)| l.abs().max(u.abs()))
            .collect();
        let mut inner = vec![0.0; a.rows()];
        for (i, v) in inner.iter_mut().enumerate() {
            *v = a.row(i).iter().zip(&radius).map(|(aij, r)| aij.abs() * r).sum::<f64>()
                + b[i].abs();
        }
        let mut outer = vec![0.0; a.cols()];
        for (i, v) in inner.iter().enumerate() {
            for (o, aij) in outer.iter_mut().zip(a.row(i)) {
                *o += aij.abs() * v;
            }
        }
        let uf = outer.into_iter().fold(0.0, f64::max);
        Ok(Self {
            a,
            b,
            reg,
            seed: None,
            lf,
            uf,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn target(&self) -> &[f64] {
        &self.b
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn to_text(&self) -> String {
        write_instance(InstanceKind::LassoBox, self.seed, &self.a, &self.b, &self.reg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let inst = read_instance(text)?;
        if inst.kind != InstanceKind::LassoBox {
            return Err(Error::InvalidInput("instance is not a lasso-box problem".into()));
        }
        let mut p = Self::from_parts(inst.a, inst.b, inst.reg)?;
        p.seed = inst.seed;
        Ok(p)
    }
}

/// Random lasso instance with standard-normal `A` (row-major
/// draws) followed by standard-normal `b`, box `[-bound, bound]ⁿ`.
pub fn make_lasso_box(m: usize, n: usize, lambda: f64, bound: f64, seed: u64) -> Result<LassoBox> {
    let (a, b) = gaussian_data(m, n, seed)?;
    let mut p = LassoBox::from_parts(a, b, BoxL1::symmetric(n, lambda, bound)?)?;
    p.seed = Some(seed);
    Ok(p)
}

impl SmoothPart for LassoBox {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.a.rows()];
        self.a.mul_vec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        0.5 * dot(&r, &r)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.value_and_gradient(x, out);
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let mut r = vec![0.0; self.a.rows()];
        self.a.mul_vec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        self.a.mul_t_vec(&r, out);
        0.5 * dot(&r, &r)
    }
}

impl CompositeProblem for LassoBox {
    fn regularizer(&self) -> &BoxL1 {
        &self.reg
    }

    fn lipschitz(&self) -> f64 {
        self.lf
    }

    fn grad_sup_bound(&self) -> f64 {
        self.uf
    }

    fn convexity(&self) -> Convexity {
        Convexity::Convex
    }
}

/// `φ(t) = t²/(1 + t²)`.
pub fn phi(t: f64) -> f64 {
    let t2 = t * t;
    t2 / (1.0 + t2)
}

/// `φ′(t) = 2t/(1 + t²)²`.
pub fn phi_prime(t: f64) -> f64 {
    let d = 1.0 + t * t;
    2.0 * t / (d * d)
}

/// `sup_t |φ′(t)|`, attained at `t = 1/√3`.
pub const PHI_PRIME_SUP: f64 = 0.649_519_052_838_329; // 3√3/8

/// `sup_t |φ″(t)|`, attained at `t = 0`.
pub const PHI_SECOND_SUP: f64 = 2.0;

/// `f(x) = Σᵢ φ(aᵢᵀx − bᵢ)` over a box with an ℓ1 penalty. Nonconvex.
#[derive(Debug, Clone)]
pub struct RobustRegression {
    a: Matrix,
    b: Vec<f64>,
    reg: BoxL1,
    seed: Option<u64>,
    lf: f64,
    uf: f64,
}

impl RobustRegression {
    pub fn from_parts(a: Matrix, b: Vec<f64>, reg: BoxL1) -> Result<Self> {
        check_data(&a, &b, &reg)?;
        // |φ″| ≤ 2, so ∇²f ⪯ 2·AᵀA in operator norm; an upper bound, not tight
        let lf = (PHI_SECOND_SUP * a.gram_lambda_max()).max(f64::MIN_POSITIVE);
        let uf = PHI_PRIME_SUP * a.max_abs_column_sum();
        Ok(Self {
            a,
            b,
            reg,
            seed: None,
            lf,
            uf,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn target(&self) -> &[f64] {
        &self.b
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn to_text(&self) -> String {
        write_instance(
            InstanceKind::RobustRegression,
            self.seed,
            &self.a,
            &self.b,
            &self.reg,
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let inst = read_instance(text)?;
        if inst.kind != InstanceKind::RobustRegression {
            return Err(Error::InvalidInput(
                "instance is not a robust-regression problem".into(),
            ));
        }
        let mut p = Self::from_parts(inst.a, inst.b, inst.reg)?;
        p.seed = inst.seed;
        Ok(p)
    }
}

/// Robust regression instance with the same data layout as [`make_lasso_box`].
pub fn make_robust_regression(
    m: usize,
    n: usize,
    lambda: f64,
    bound: f64,
    seed: u64,
) -> Result<RobustRegression> {
    let (a, b) = gaussian_data(m, n, seed)?;
    let mut p = RobustRegression::from_parts(a, b, BoxL1::symmetric(n, lambda, bound)?)?;
    p.seed = Some(seed);
    Ok(p)
}

impl SmoothPart for RobustRegression {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.a.rows())
            .map(|i| phi(dot(self.a.row(i), x) - self.b[i]))
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.value_and_gradient(x, out);
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let mut weights = vec![0.0; self.a.rows()];
        let mut value = 0.0;
        for (i, w) in weights.iter_mut().enumerate() {
            let r = dot(self.a.row(i), x) - self.b[i];
            value += phi(r);
            *w = phi_prime(r);
        }
        self.a.mul_t_vec(&weights, out);
        value
    }
}

impl CompositeProblem for RobustRegression {
    fn regularizer(&self) -> &BoxL1 {
        &self.reg
    }

    fn lipschitz(&self) -> f64 {
        self.lf
    }

    fn grad_sup_bound(&self) -> f64 {
        self.uf
    }

    fn convexity(&self) -> Convexity {
        Convexity::Nonconvex
    }
}

/// `f(x) = (μ/2)‖x − c‖²` over a box with an optional ℓ1 penalty.
#[derive(Debug, Clone)]
pub struct QuadBox {
    center: Vec<f64>,
    mu: f64,
    reg: BoxL1,
}

impl QuadBox {
    pub fn new(center: Vec<f64>, mu: f64, lambda: f64, bound: f64) -> Result<Self> {
        let reg = BoxL1::symmetric(center.len(), lambda, bound)?;
        Self::with_regularizer(center, mu, reg)
    }

    pub fn with_regularizer(center: Vec<f64>, mu: f64, reg: BoxL1) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus must be positive, got {mu}"
            )));
        }
        if center.is_empty() || center.len() != reg.dim() {
            return Err(Error::InvalidInput(format!(
                "center has {} entries, regularizer has {}",
                center.len(),
                reg.dim()
            )));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("center must be finite".into()));
        }
        Ok(Self { center, mu, reg })
    }

    /// Standard-normal center of dimension `n`.
    pub fn random(n: usize, mu: f64, lambda: f64, bound: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut rng = stream(seed, Lane::ProblemData, 0);
        let center = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::new(center, mu, lambda, bound)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn modulus(&self) -> f64 {
        self.mu
    }

    /// Exact minimizer when `λ = 0`, or more generally the prox of `h/μ` at `c`.
    pub fn minimizer(&self) -> Vec<f64> {
        self.reg
            .prox(&self.center, 1.0 / self.mu)
            .expect("center is finite and step is positive")
    }
}

impl SmoothPart for QuadBox {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.mu * dist2(x, &self.center).powi(2)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = self.mu * (xi - ci);
        }
    }
}

impl CompositeProblem for QuadBox {
    fn regularizer(&self) -> &BoxL1 {
        &self.reg
    }

    fn lipschitz(&self) -> f64 {
        self.mu
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn grad_sup_bound(&self) -> f64 {
        let reg = &self.reg;
        self.center
            .iter()
            .enumerate()
            .map(|(i, c)| self.mu * (reg.lower()[i] - c).abs().max((reg.upper()[i] - c).abs()))
            .fold(0.0, f64::max)
    }

    fn convexity(&self) -> Convexity {
        Convexity::StronglyConvex
    }
}

/// Result of [`reference_solve`].
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    /// Best objective value seen.
    pub value: f64,
    /// Gradient-mapping residual `L‖x − prox_{h/L}(x − ∇f(x)/L)‖` at `x`.
    pub residual: f64,
    pub iterations: usize,
    /// True when the problem is convex and the residual reached `tol`.
    pub certified: bool,
}

pub const REFERENCE_TOL: f64 = 1e-9;
const REFERENCE_MAX_ITER: usize = 2_000_000;

/// Deterministic proximal gradient with exact gradients and step `1/L`,
/// started from the projection of the origin, stopped when the gradient
/// mapping residual drops to `tol`.
///
/// Nonconvex problems are run the same way but the result is never marked
/// certified.
pub fn reference_solve<P: CompositeProblem + ?Sized>(problem: &P, tol: f64) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let reg = problem.regularizer();
    let n = problem.dim();
    let l = problem.lipschitz();
    let step = 1.0 / l;
    let mut x = reg.prox(&vec![0.0; n], step)?;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut best_value = f64::INFINITY;
    let mut best_x = x.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < REFERENCE_MAX_ITER {
        let fx = problem.value_and_gradient(&x, &mut grad);
        let value = fx + reg.value(&x);
        if value < best_value {
            best_value = value;
            best_x.copy_from_slice(&x);
        }
        for i in 0..n {
            trial[i] = x[i] - step * grad[i];
        }
        reg.prox_into(&trial, step, &mut next);
        residual = l * dist2(&x, &next);
        if residual <= tol {
            break;
        }
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
    }
    let converged = residual <= tol;
    // report the final iterate when it certifies; otherwise the best one
    let (x, value) = if converged {
        let v = problem.objective(&x);
        if v <= best_value {
            (x, v)
        } else {
            (best_x, best_value)
        }
    } else {
        (best_x, best_value)
    };
    Ok(ReferenceSolution {
        x,
        value,
        residual,
        iterations,
        certified: converged && problem.convexity() != Convexity::Nonconvex,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InstanceKind {
    LassoBox,
    RobustRegression,
}

impl InstanceKind {
    fn tag(self) -> &'static str {
        match self {
            InstanceKind::LassoBox => "lasso-box",
            InstanceKind::RobustRegression => "robust-regression",
        }
    }
}

const INSTANCE_MAGIC: &str = "spgm-instance";
const INSTANCE_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        // shortest representation that parses back to the same bits
        write!(s, "{v:?}").unwrap();
    }
    s
}

fn write_instance(kind: InstanceKind, seed: Option<u64>, a: &Matrix, b: &[f64], reg: &BoxL1) -> String {
    let mut s = String::new();
    writeln!(s, "{INSTANCE_MAGIC} v{INSTANCE_VERSION}").unwrap();
    writeln!(s, "kind {}", kind.tag()).unwrap();
    writeln!(s, "m {}", a.rows()).unwrap();
    writeln!(s, "n {}", a.cols()).unwrap();
    match seed {
        Some(seed) => writeln!(s, "seed {seed}").unwrap(),
        None => writeln!(s, "seed none").unwrap(),
    }
    writeln!(s, "lambda {:?}", reg.lambda()).unwrap();
    writeln!(s, "lower {}", join(reg.lower())).unwrap();
    writeln!(s, "upper {}", join(reg.upper())).unwrap();
    writeln!(s, "A").unwrap();
    for i in 0..a.rows() {
        writeln!(s, "{}", join(a.row(i))).unwrap();
    }
    writeln!(s, "b").unwrap();
    writeln!(s, "{}", join(b)).unwrap();
    s
}

struct Instance {
    kind: InstanceKind,
    seed: Option<u64>,
    a: Matrix,
    b: Vec<f64>,
    reg: BoxL1,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("instance file: {}", msg.into()))
}

fn parse_floats(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number {t:?} in {what}"))))
        .collect::<Result<_>>()?;
    if v.len() != expected {
        return Err(bad(format!("{what} has {} values, expected {expected}", v.len())));
    }
    Ok(v)
}

struct Lines<'a>(std::str::Lines<'a>);

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.0.next().ok_or_else(|| bad(format!("missing {what}")))
    }

    /// Value of a `key value` line; empty for a bare `key` line.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if line == key => Ok(""),
            _ => Err(bad(format!("expected {key:?}, found {line:?}"))),
        }
    }
}

fn read_instance(text: &str) -> Result<Instance> {
    let mut lines = Lines(text.lines());
    let header = lines.next("header")?;
    if header != format!("{INSTANCE_MAGIC} v{INSTANCE_VERSION}") {
        return Err(bad(format!("unsupported header {header:?}")));
    }
    let kind = match lines.field("kind")? {
        "lasso-box" => InstanceKind::LassoBox,
        "robust-regression" => InstanceKind::RobustRegression,
        other => return Err(bad(format!("unknown kind {other:?}"))),
    };
    let m: usize = lines.field("m")?.parse().map_err(|_| bad("bad m"))?;
    let n: usize = lines.field("n")?.parse().map_err(|_| bad("bad n"))?;
    let seed = match lines.field("seed")? {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| bad("bad seed"))?),
    };
    let lambda: f64 = lines.field("lambda")?.parse().map_err(|_| bad("bad lambda"))?;
    let lower = parse_floats(lines.field("lower")?, n, "lower")?;
    let upper = parse_floats(lines.field("upper")?, n, "upper")?;
    if !lines.field("A")?.is_empty() {
        return Err(bad("malformed matrix marker"));
    }
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        data.extend(parse_floats(lines.next("matrix row")?, n, &format!("row {i}"))?);
    }
    if !lines.field("b")?.is_empty() {
        return Err(bad("malformed target marker"));
    }
    let b = parse_floats(lines.next("targets")?, m, "b")?;
    Ok(Instance {
        kind,
        seed,
        a: Matrix::from_row_major(m, n, data)?,
        b,
        reg: BoxL1::new(lambda, lower, upper)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::soft_threshold;

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(1.0), 0.5);
        assert!(phi(1e3) < 1.0);
        let t = 1.0 / 3.0f64.sqrt();
        assert!((phi_prime(t) - PHI_PRIME_SUP).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let a = Matrix::from_row_major(3, 3, vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!((a.gram_lambda_max() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn zero_design_has_zero_gradient_and_zero_minimizer() {
        let a = Matrix::from_row_major(4, 3, vec![0.0; 12]).unwrap();
        let p = LassoBox::from_parts(a, vec![1.0, -2.0, 0.5, 3.0], BoxL1::symmetric(3, 1.0, 100.0).unwrap()).unwrap();
        let x = [4.0, -7.0, 1.0];
        assert_eq!(p.gradient(&x), vec![0.0; 3]);
        let sol = reference_solve(&p, REFERENCE_TOL).unwrap();
        assert_eq!(sol.x, vec![0.0; 3]);
    }

    #[test]
    fn quad_box_reference_is_projection() {
        let c = vec![3.0, -150.0, 0.2, 250.0];
        let p = QuadBox::new(c.clone(), 1.0, 0.0, 100.0).unwrap();
        let sol = reference_solve(&p, REFERENCE_TOL).unwrap();
        let expect = crate::linalg::project_box(&c, p.regularizer().lower(), p.regularizer().upper()).unwrap();
        assert!(dist2(&sol.x, &expect) <= 1e-8);
        assert!(sol.certified);
    }

    #[test]
    fn identity_lasso_reference_is_soft_threshold() {
        let b = vec![3.0, -0.5, 0.9, -4.0, 1.5];
        let reg = BoxL1::symmetric(5, 1.0, 1e3).unwrap();
        let p = LassoBox::from_parts(Matrix::identity(5), b.clone(), reg).unwrap();
        let sol = reference_solve(&p, REFERENCE_TOL).unwrap();
        for (xi, bi) in sol.x.iter().zip(&b) {
            assert!((xi - soft_threshold(*bi, 1.0)).abs() <= 1e-8);
        }
        assert!(sol.residual <= REFERENCE_TOL);
    }

    #[test]
    fn nonconvex_reference_is_not_certified() {
        let p = make_robust_regression(20, 5, 0.1, 10.0, 3).unwrap();
        let sol = reference_solve(&p, 1e-6).unwrap();
        assert!(!sol.certified);
        assert!(sol.value <= p.objective(&[0.0; 5]));
    }

    #[test]
    fn instances_are_seed_determined() {
        let p = make_lasso_box(6, 4, 1.0, 100.0, 9).unwrap();
        let q = make_lasso_box(6, 4, 1.0, 100.0, 9).unwrap();
        assert_eq!(p.matrix(), q.matrix());
        assert_eq!(p.target(), q.target());
        let r = make_lasso_box(6, 4, 1.0, 100.0, 10).unwrap();
        assert_ne!(p.matrix(), r.matrix());
        assert!(make_lasso_box(0, 4, 1.0, 100.0, 1).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = make_lasso_box(7, 3, 0.5, 20.0, 42).unwrap();
        let q = LassoBox::from_text(&p.to_text()).unwrap();
        assert_eq!(p.matrix(), q.matrix());
        assert_eq!(p.target(), q.target());
        assert_eq!(p.regularizer(), q.regularizer());
        assert_eq!(q.seed(), Some(42));
        assert_eq!(p.lipschitz(), q.lipschitz());

        let r = make_robust_regression(5, 2, 1.0, 100.0, 1).unwrap();
        let s = RobustRegression::from_text(&r.to_text()).unwrap();
        assert_eq!(r.matrix(), s.matrix());
        assert!(LassoBox::from_text(&r.to_text()).is_err());
        assert!(LassoBox::from_text("garbage").is_err());
    }
}
