//! JSON experiment configuration. Every field has a default, so `{}` is a
//! valid file; command-line flags are applied on top of the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spgm_core::noise::NoiseModel;

use crate::error::{CliError, CliResult};

pub const DEFAULT_MAX_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Biasvar,
    #[default]
    Solve,
    Sweep,
    Bounds,
    Selftest,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Biasvar => "biasvar",
            CommandKind::Solve => "solve",
            CommandKind::Sweep => "sweep",
            CommandKind::Bounds => "bounds",
            CommandKind::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    /// Base seed of every random stream of the run.
    pub seed: u64,
    /// Output directory; not echoed.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Worker threads; not echoed, results do not depend on it.
    #[serde(skip_serializing)]
    pub jobs: usize,
    pub max_cells: usize,
    pub problem: ProblemSpec,
    /// Noise model of a single-model run, e.g. `pareto-sym:1.5`.
    pub noise: String,
    pub solver: SolverSpec,
    pub sweep: SweepSpec,
    pub biasvar: BiasvarSpec,
    pub bounds: BoundsSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::default(),
            seed: 0,
            out: PathBuf::from("out"),
            jobs: 1,
            max_cells: DEFAULT_MAX_CELLS,
            problem: ProblemSpec::default(),
            noise: "pareto-sym:1.5".into(),
            solver: SolverSpec::default(),
            sweep: SweepSpec::default(),
            biasvar: BiasvarSpec::default(),
            bounds: BoundsSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    #[default]
    LassoBox,
    RobustRegression,
    QuadBox,
    /// A serialized lasso or robust-regression instance read from `path`.
    Instance,
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lasso-box" => Ok(ProblemKind::LassoBox),
            "robust-regression" => Ok(ProblemKind::RobustRegression),
            "quad-box" => Ok(ProblemKind::QuadBox),
            "instance" => Ok(ProblemKind::Instance),
            other => Err(format!("unknown problem kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub bound: f64,
    /// Modulus of the quadratic test problem.
    pub mu: f64,
    /// Data seed; the run seed when absent.
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            kind: ProblemKind::LassoBox,
            m: 200,
            n: 100,
            lambda: 1.0,
            bound: 100.0,
            mu: 1.0,
            seed: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoKind {
    #[default]
    Spgm,
    SpgmMomentum,
}

impl FromStr for AlgoKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spgm" => Ok(AlgoKind::Spgm),
            "spgm-momentum" => Ok(AlgoKind::SpgmMomentum),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// Constant `η`.
    #[default]
    Constant,
    /// `η_k = 2/(μ_f(k + 1))`.
    Scvx,
    /// Step (and momentum weight) from the iteration-complexity recipes.
    Theorem,
}

impl FromStr for StepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constant" => Ok(StepKind::Constant),
            "scvx" => Ok(StepKind::Scvx),
            "theorem" => Ok(StepKind::Theorem),
            other => Err(format!("unknown step rule {other:?}")),
        }
    }
}

/// Clipping threshold: a number, `"inf"` (no clipping) or `"theorem"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TauRepr", into = "TauRepr")]
pub enum TauSpec {
    Value(f64),
    Unclipped,
    Theorem,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TauRepr {
    Num(f64),
    Word(String),
}

impl TryFrom<TauRepr> for TauSpec {
    type Error = String;

    fn try_from(r: TauRepr) -> Result<Self, String> {
        match r {
            TauRepr::Num(v) => Ok(TauSpec::Value(v)),
            TauRepr::Word(w) => w.parse(),
        }
    }
}

impl From<TauSpec> for TauRepr {
    fn from(t: TauSpec) -> Self {
        match t {
            TauSpec::Value(v) if v.is_finite() => TauRepr::Num(v),
            other => TauRepr::Word(other.to_string()),
        }
    }
}

impl FromStr for TauSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "none" => Ok(TauSpec::Unclipped),
            "theorem" => Ok(TauSpec::Theorem),
            other => other
                .parse::<f64>()
                .map(|v| if v.is_infinite() { TauSpec::Unclipped } else { TauSpec::Value(v) })
                .map_err(|_| format!("bad clipping threshold {other:?}")),
        }
    }
}

impl fmt::Display for TauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSpec::Value(v) => write!(f, "{v}"),
            TauSpec::Unclipped => write!(f, "inf"),
            TauSpec::Theorem => write!(f, "theorem"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub algo: AlgoKind,
    pub step: StepKind,
    pub eta: f64,
    /// Momentum weight; `4·L_f·η` when absent.
    pub theta: Option<f64>,
    pub tau: TauSpec,
    pub iterations: usize,
    /// Target accuracy of the theorem-driven threshold and step.
    pub eps: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            algo: AlgoKind::Spgm,
            step: StepKind::Constant,
            eta: 1e-3,
            theta: None,
            tau: TauSpec::Value(10.0),
            iterations: 10_000,
            eps: None,
        }
    }
}

/// Sweep axes; an empty axis falls back to the single value of the solver
/// section (or the top-level noise and seed).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub noise: Vec<String>,
    /// Tail indices, each adding a `pareto-sym:α` model.
    pub alpha: Vec<f64>,
    pub tau: Vec<TauSpec>,
    pub eta: Vec<f64>,
    pub iterations: Vec<usize>,
    pub seeds: Vec<u64>,
}

/// Inclusive arithmetic grid `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        if !(self.step > 0.0 && self.start.is_finite() && self.stop >= self.start) {
            return Err(CliError::Config(format!("bad grid {self:?}")));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasvarSpec {
    pub models: Vec<String>,
    /// Values of the estimated constant `a`.
    pub offsets: Vec<f64>,
    pub tau: GridSpec,
    pub samples: usize,
}

impl Default for BiasvarSpec {
    fn default() -> Self {
        Self {
            models: vec![
                "gaussian:1".into(),
                "pareto-sym:1.5".into(),
                "cauchy".into(),
                "pareto-sym:0.5".into(),
            ],
            offsets: vec![1.0],
            tau: GridSpec {
                start: 1.0,
                stop: 100.0,
                step: 1.0,
            },
            samples: 100_000,
        }
    }
}

/// Tail constants supplied by hand instead of taken from a noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub tau2: Option<f64>,
}

/// Problem constants supplied by hand instead of derived from an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub lf: f64,
    pub mu_f: f64,
    pub uf: f64,
    pub dh: f64,
    pub flow: f64,
    /// `F(x⁰)`.
    pub f0: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    pub eps: Vec<f64>,
    /// Fixed threshold for every accuracy instead of the theorem choice.
    pub tau: Option<f64>,
    /// Thresholds of the `σ²(τ)` table; a log grid above `τ₍₁₎` when absent.
    pub tau_curve: Option<Vec<f64>>,
    pub tail: Option<TailSpec>,
    pub constants: Option<ConstantsSpec>,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            eps: vec![0.1, 0.05, 0.025, 0.0125],
            tau: None,
            tau_curve: None,
            tail: None,
            constants: None,
        }
    }
}

/// Values given on the command line; each one replaces its config field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub problem: Option<ProblemKind>,
    pub noise: Option<String>,
    pub algo: Option<AlgoKind>,
    pub step: Option<StepKind>,
    pub eta: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub tau: Option<Vec<TauSpec>>,
    pub iterations: Option<Vec<usize>>,
    pub seeds: Option<Vec<u64>>,
    pub alpha: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub max_cells: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies flag values. Single-value solver flags set the solver field
    /// when one value is given and the sweep axis otherwise.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.jobs {
            self.jobs = v;
        }
        if let Some(v) = o.problem {
            self.problem.kind = v;
        }
        if let Some(v) = &o.noise {
            self.noise = v.clone();
            self.sweep.noise.clear();
            self.sweep.alpha.clear();
        }
        if let Some(v) = o.algo {
            self.solver.algo = v;
        }
        if let Some(v) = o.step {
            self.solver.step = v;
        }
        if let Some(v) = o.theta {
            self.solver.theta = Some(v);
        }
        if let Some(v) = &o.eta {
            match v.as_slice() {
                [one] => {
                    self.solver.eta = *one;
                    self.sweep.eta.clear();
                }
                many => self.sweep.eta = many.to_vec(),
            }
        }
        if let Some(v) = &o.tau {
            match v.as_slice() {
                [one] => {
                    self.solver.tau = *one;
                    self.sweep.tau.clear();
                }
                many => self.sweep.tau = many.to_vec(),
            }
        }
        if let Some(v) = &o.iterations {
            match v.as_slice() {
                [one] => {
                    self.solver.iterations = *one;
                    self.sweep.iterations.clear();
                }
                many => self.sweep.iterations = many.to_vec(),
            }
        }
        if let Some(v) = &o.seeds {
            self.sweep.seeds = v.clone();
        }
        if let Some(v) = &o.alpha {
            self.sweep.alpha = v.clone();
            self.sweep.noise.clear();
        }
        if let Some(v) = &o.eps {
            match self.command {
                CommandKind::Bounds => self.bounds.eps = v.clone(),
                _ => self.solver.eps = v.first().copied(),
            }
        }
        if let Some(v) = o.samples {
            self.biasvar.samples = v;
        }
        if let Some(v) = o.max_cells {
            self.max_cells = v;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.jobs == 0 {
            return bad("--jobs must be at least 1".into());
        }
        if self.max_cells == 0 {
            return bad("max_cells must be at least 1".into());
        }
        let p = &self.problem;
        if p.kind == ProblemKind::Instance && p.path.is_none() {
            return bad("problem kind \"instance\" needs a path".into());
        }
        if p.m == 0 || p.n == 0 {
            return bad("problem dimensions must be positive".into());
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return bad(format!("problem lambda must be finite and nonnegative, got {}", p.lambda));
        }
        if !(p.bound >= 0.0 && p.bound.is_finite()) {
            return bad(format!("problem bound must be finite and nonnegative, got {}", p.bound));
        }
        if p.kind == ProblemKind::QuadBox && !(p.mu > 0.0 && p.mu.is_finite()) {
            return bad(format!("quad-box modulus must be positive, got {}", p.mu));
        }
        self.models()?;
        let s = &self.solver;
        for eta in self.etas() {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("step size must be positive, got {eta}"));
            }
        }
        if let Some(t) = s.theta {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("theta must lie in (0, 1], got {t}"));
            }
        }
        for tau in self.taus() {
            match tau {
                TauSpec::Value(v) if !(v >= 0.0) => {
                    return bad(format!("clipping threshold must be nonnegative, got {v}"))
                }
                TauSpec::Theorem if s.eps.is_none() => {
                    return bad("tau \"theorem\" needs solver.eps".into())
                }
                _ => {}
            }
        }
        if s.step == StepKind::Theorem && s.eps.is_none() {
            return bad("step \"theorem\" needs solver.eps".into());
        }
        if let Some(e) = s.eps {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("solver.eps must lie in (0, 1), got {e}"));
            }
        }
        if self.iteration_counts().contains(&0) {
            return bad("iteration budget must be at least 1".into());
        }
        let b = &self.biasvar;
        if b.samples == 0 {
            return bad("biasvar.samples must be at least 1".into());
        }
        if b.offsets.is_empty() || b.offsets.iter().any(|a| !a.is_finite()) {
            return bad("biasvar.offsets must be a nonempty list of finite numbers".into());
        }
        let taus = b.tau.values()?;
        if taus.iter().any(|t| *t < 0.0) {
            return bad("biasvar thresholds must be nonnegative".into());
        }
        if self.bounds.eps.is_empty() || self.bounds.eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return bad("bounds.eps must be a nonempty list in (0, 1]".into());
        }
        Ok(())
    }

    /// Noise models of a solver run, in cell order.
    pub fn models(&self) -> CliResult<Vec<NoiseModel>> {
        let parse = |s: &str| {
            s.parse::<NoiseModel>()
                .map_err(|e| CliError::Config(format!("noise {s:?}: {e}")))
        };
        let mut out = Vec::new();
        for s in &self.sweep.noise {
            out.push(parse(s)?);
        }
        for a in &self.sweep.alpha {
            out.push(
                NoiseModel::pareto_sym(*a).map_err(|e| CliError::Config(format!("alpha {a}: {e}")))?,
            );
        }
        if out.is_empty() {
            out.push(parse(&self.noise)?);
        }
        Ok(out)
    }

    pub fn biasvar_models(&self) -> CliResult<Vec<NoiseModel>> {
        self.biasvar
            .models
            .iter()
            .map(|s| {
                s.parse::<NoiseModel>()
                    .map_err(|e| CliError::Config(format!("noise {s:?}: {e}")))
            })
            .collect()
    }

    pub fn taus(&self) -> Vec<TauSpec> {
        axis(&self.sweep.tau, self.solver.tau)
    }

    pub fn etas(&self) -> Vec<f64> {
        axis(&self.sweep.eta, self.solver.eta)
    }

    pub fn iteration_counts(&self) -> Vec<usize> {
        axis(&self.sweep.iterations, self.solver.iterations)
    }

    pub fn seeds(&self) -> Vec<u64> {
        axis(&self.sweep.seeds, self.seed)
    }

    pub fn problem_seed(&self) -> u64 {
        self.problem.seed.unwrap_or(self.seed)
    }

    /// The config as `#`-prefixed JSON lines, for the head of every output.
    pub fn echo(&self) -> String {
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        let mut s = String::new();
        for line in json.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

fn axis<T: Clone>(list: &[T], single: T) -> Vec<T> {
    if list.is_empty() {
        vec![single]
    } else {
        list.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"solver": {"etaa": 1}}"#).is_err());
    }

    #[test]
    fn tau_accepts_numbers_and_keywords() {
        let c = ExperimentConfig::from_json(r#"{"sweep": {"tau": [0.01, "inf", "theorem"]}}"#).unwrap();
        assert_eq!(c.sweep.tau, vec![TauSpec::Value(0.01), TauSpec::Unclipped, TauSpec::Theorem]);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.sweep.tau, c.sweep.tau);
    }

    #[test]
    fn flags_override_file_values() {
        let mut c = ExperimentConfig::from_json(r#"{"seed": 3, "solver": {"eta": 0.1}, "sweep": {"eta": [1, 2]}}"#)
            .unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            eta: Some(vec![0.5]),
            ..Default::default()
        });
        assert_eq!(c.seed, 9);
        assert_eq!(c.etas(), vec![0.5]);
    }

    #[test]
    fn echo_omits_output_and_jobs() {
        let mut c = ExperimentConfig::default();
        c.out = "somewhere".into();
        c.jobs = 7;
        let e = c.echo();
        assert!(e.lines().all(|l| l.starts_with("# ")));
        assert!(!e.contains("somewhere") && !e.contains("jobs"));
    }

    #[test]
    fn grid_is_inclusive() {
        let g = GridSpec { start: 1.0, stop: 100.0, step: 1.0 };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 100);
        assert_eq!(v[99], 100.0);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::default();
        c.solver.theta = Some(1.5);
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = ExperimentConfig::default();
        c.noise = "pareto-sym:3".into();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
