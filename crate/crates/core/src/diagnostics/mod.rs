//! Stationarity measures, Minty-VI sampling studies, hyperparameter plans
//! and the metric-tuning bound evaluators.

use thiserror::Error;

use crate::geometry::{DualVector, GeometryError, JointPoint, MetricMatrix};
use crate::oracles::OracleError;
use crate::problems::{MinMaxProblem, ProblemError};

mod goldstein;
mod mvi;
mod nu;
mod plans;

pub use goldstein::{goldstein_mu, goldstein_surrogate, GoldsteinCertificate};
pub use mvi::{prox_mvi_sampler, weak_mvi_sampler, GradientSource, Histogram, MviReport, MviStudy};
pub use nu::{nu_bound, nu_constants, nu_optimize, LambdaStar, NuConstants, NuOptimum, NuParams, NuSetting};
pub use plans::{
    plan_constrained, plan_harmonic, plan_nonsmooth, plan_unconstrained, ConstrainedInput, HarmonicInput,
    HyperparamPlan, NonsmoothInput, PlanSource, UnconstrainedInput,
};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible step-size window: {0}")]
    Infeasible(String),
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub(crate) fn positive(name: &str, v: f64) -> Result<(), DiagnosticsError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn nonnegative(name: &str, v: f64) -> Result<(), DiagnosticsError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidInput(format!("{name} must be nonnegative and finite, got {v}")))
    }
}

/// Projected residual `(z - Proj(z - h g)) / h`. Returns `g` itself when the
/// problem is unconstrained.
pub fn projected_residual(
    problem: &MinMaxProblem,
    z: &JointPoint,
    h: f64,
    g: &DualVector,
    metric: &MetricMatrix,
) -> Result<DualVector, DiagnosticsError> {
    gradient_mapping_tau(problem, z, h, h, g, metric)
}

/// Gradient mapping with block steps `h1` (x) and `h2` (y):
/// `((x - Proj(x - h1 g_x)) / h1, (y - Proj(y - h2 g_y)) / h2)` with `g` in
/// operator sign convention. Exactly `g` when unconstrained.
pub fn gradient_mapping_tau(
    problem: &MinMaxProblem,
    z: &JointPoint,
    h1: f64,
    h2: f64,
    g: &DualVector,
    metric: &MetricMatrix,
) -> Result<DualVector, DiagnosticsError> {
    positive("h1", h1)?;
    positive("h2", h2)?;
    problem.check_dims(z)?;
    if g.dims() != z.dims() {
        return Err(ProblemError::DimensionMismatch(format!(
            "operator value has dims {:?}, point has {:?}",
            g.dims(),
            z.dims()
        ))
        .into());
    }
    if problem.set().is_unconstrained() {
        return Ok(g.clone());
    }
    let w = JointPoint::new(&z.x - &g.x * h1, &z.y - &g.y * h2);
    let p = problem.project(&w, metric)?;
    Ok(DualVector::new((&z.x - &p.x) / h1, (&z.y - &p.y) / h2))
}

/// Stationarity summary at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Euclidean norm of the supplied operator value.
    pub grad_norm: f64,
    /// Dual norm of the gradient mapping; `None` when unconstrained.
    pub mapping_norm: Option<f64>,
    pub goldstein: Option<GoldsteinCertificate>,
    pub evals_spent: u64,
    pub warnings: Vec<String>,
}

/// Stationarity of `z` given an operator value `g` (analytic or estimated).
pub fn stationarity_report(
    problem: &MinMaxProblem,
    z: &JointPoint,
    h1: f64,
    h2: f64,
    g: &DualVector,
    metric: &MetricMatrix,
) -> Result<StationarityReport, DiagnosticsError> {
    let mapping_norm = if problem.set().is_unconstrained() {
        None
    } else {
        let tau = gradient_mapping_tau(problem, z, h1, h2, g, metric)?;
        Some(metric.dual_norm(&tau)?)
    };
    Ok(StationarityReport {
        grad_norm: g.norm(),
        mapping_norm,
        goldstein: None,
        evals_spent: 0,
        warnings: Vec::new(),
    })
}
