use std::path::Path;

use spgm_core::problems::{
    make_lasso_box, make_robust_regression, reference_solve, CompositeProblem, Convexity,
    LassoBox, QuadBox, RobustRegression, REFERENCE_TOL,
};

use crate::config::{ExperimentConfig, ProblemKind};
use crate::error::{CliError, CliResult};

/// A problem built from the config.
pub enum Instance {
    Lasso(LassoBox),
    Robust(RobustRegression),
    Quad(QuadBox),
}

impl Instance {
    pub fn build(config: &ExperimentConfig) -> CliResult<Self> {
        let p = &config.problem;
        let seed = config.problem_seed();
        Ok(match p.kind {
            ProblemKind::LassoBox => Instance::Lasso(make_lasso_box(p.m, p.n, p.lambda, p.bound, seed)?),
            ProblemKind::RobustRegression => {
                Instance::Robust(make_robust_regression(p.m, p.n, p.lambda, p.bound, seed)?)
            }
            ProblemKind::QuadBox => Instance::Quad(QuadBox::random(p.n, p.mu, p.lambda, p.bound, seed)?),
            ProblemKind::Instance => {
                let path = p.path.as_deref().expect("validated");
                Self::read(path)?
            }
        })
    }

    /// Reads a serialized lasso or robust-regression instance.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let kind = text.lines().nth(1).unwrap_or_default();
        let parsed = match kind.trim() {
            "kind lasso-box" => LassoBox::from_text(&text).map(Instance::Lasso),
            "kind robust-regression" => RobustRegression::from_text(&text).map(Instance::Robust),
            other => {
                return Err(CliError::Config(format!(
                    "{}: unrecognized instance header {other:?}",
                    path.display()
                )))
            }
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Text dump for replay, when the instance has one.
    pub fn to_text(&self) -> Option<String> {
        match self {
            Instance::Lasso(p) => Some(p.to_text()),
            Instance::Robust(p) => Some(p.to_text()),
            Instance::Quad(_) => None,
        }
    }

    pub fn problem(&self) -> &dyn CompositeProblem {
        match self {
            Instance::Lasso(p) => p,
            Instance::Robust(p) => p,
            Instance::Quad(p) => p,
        }
    }

    /// Optimal value: closed form for the quadratic, a certified
    /// deterministic solve for the lasso, none for nonconvex problems.
    pub fn reference_value(&self) -> CliResult<Option<f64>> {
        match self {
            Instance::Quad(q) => Ok(Some(q.objective(&q.minimizer()))),
            other if other.problem().convexity() == Convexity::Nonconvex => Ok(None),
            other => {
                let r = reference_solve(other.problem(), REFERENCE_TOL)?;
                Ok(r.certified.then_some(r.value))
            }
        }
    }
}
