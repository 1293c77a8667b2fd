//! The min-max problem abstraction and the benchmark instances.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{DualVector, JointPoint, MetricMatrix};
use crate::oracles::Objective;

mod abs_diff;
mod lane;
mod poisoning;
mod rls;
mod sets;
mod toy;

pub use abs_diff::{abs_diff_operator_mu, abs_diff_problem};
pub use lane::{rk4_step, CarInput, CarState, LaneMerging, LaneMergingParams};
pub use poisoning::{poisoning_problem, PoisoningData, PoisoningParams};
pub use rls::{rls_problem, RlsInstance};
pub use sets::{Block, Component, FeasibleSet};
pub use toy::{bilinear_problem, toy_f1, toy_f2, toy_f3};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid feasible set: {0}")]
    InvalidSet(String),
    #[error("unsupported projection: {0}")]
    UnsupportedProjection(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset format: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset format: {0}")]
    Format(String),
}

pub type ObjectiveFn = Arc<dyn Fn(&JointPoint) -> f64 + Send + Sync>;
pub type OperatorFn = Arc<dyn Fn(&JointPoint) -> DualVector + Send + Sync>;

/// Regularity and solution metadata. Every field is optional; diagnostics
/// that need a missing value either skip their check or report an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemMetadata {
    /// Lipschitz constant of `f`.
    pub l0: Option<f64>,
    /// Lipschitz constant of `F`.
    pub l1: Option<f64>,
    /// Weak-MVI parameter.
    pub rho: Option<f64>,
    pub z_star: Option<JointPoint>,
    /// Compact box `(lower, upper)` over which `l0` holds, for locally
    /// Lipschitz objectives.
    pub probe_box: Option<(Vec<f64>, Vec<f64>)>,
}

/// `min_{x in X} max_{y in Y} f(x, y)` with optional operator
/// `F(z) = (grad_x f, -grad_y f)`.
#[derive(Clone)]
pub struct MinMaxProblem {
    name: String,
    n: usize,
    m: usize,
    objective: ObjectiveFn,
    operator: Option<OperatorFn>,
    set: FeasibleSet,
    pub metadata: ProblemMetadata,
}

impl fmt::Debug for MinMaxProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MinMaxProblem")
            .field("name", &self.name)
            .field("dims", &(self.n, self.m))
            .field("has_operator", &self.operator.is_some())
            .field("set", &self.set)
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl MinMaxProblem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        objective: impl Fn(&JointPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            m,
            objective: Arc::new(objective),
            operator: None,
            set: FeasibleSet::Unconstrained,
            metadata: ProblemMetadata::default(),
        }
    }

    pub fn with_operator(
        mut self,
        operator: impl Fn(&JointPoint) -> DualVector + Send + Sync + 'static,
    ) -> Self {
        self.operator = Some(Arc::new(operator));
        self
    }

    pub fn without_operator(mut self) -> Self {
        self.operator = None;
        self
    }

    pub fn with_set(mut self, set: FeasibleSet) -> Result<Self, ProblemError> {
        set.validate(self.n, self.m)?;
        self.set = set;
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: ProblemMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn value(&self, z: &JointPoint) -> f64 {
        (self.objective)(z)
    }

    pub fn has_operator(&self) -> bool {
        self.operator.is_some()
    }

    /// `F(z)` when an analytic gradient is attached.
    pub fn operator(&self, z: &JointPoint) -> Option<DualVector> {
        self.operator.as_ref().map(|op| op(z))
    }

    pub fn operator_fn(&self) -> Option<OperatorFn> {
        self.operator.clone()
    }

    pub fn objective_fn(&self) -> ObjectiveFn {
        self.objective.clone()
    }

    pub fn project(&self, z: &JointPoint, metric: &MetricMatrix) -> Result<JointPoint, ProblemError> {
        self.check_dims(z)?;
        self.set.project(z, metric)
    }

    pub fn contains(&self, z: &JointPoint, tol: f64) -> bool {
        z.dims() == (self.n, self.m) && self.set.contains(z, tol)
    }

    /// Euclidean diameter `D_z` of the feasible set.
    pub fn diameter(&self) -> f64 {
        self.set.diameter(self.n, self.m)
    }

    pub fn check_dims(&self, z: &JointPoint) -> Result<(), ProblemError> {
        if z.dims() != (self.n, self.m) {
            return Err(ProblemError::DimensionMismatch(format!(
                "problem {} has dims ({}, {}), point has ({}, {})",
                self.name,
                self.n,
                self.m,
                z.n(),
                z.m()
            )));
        }
        Ok(())
    }

    /// Central finite-difference approximation of `F(z)` with step `step`.
    pub fn finite_difference_operator(&self, z: &JointPoint, step: f64) -> DualVector {
        let mut g = z.clone();
        let mut probe = z.clone();
        for i in 0..z.dim() {
            let v = z.get(i);
            probe.set(i, v + step);
            let plus = self.value(&probe);
            probe.set(i, v - step);
            let minus = self.value(&probe);
            probe.set(i, v);
            g.set(i, (plus - minus) / (2.0 * step));
        }
        g.negate_y()
    }
}

impl Objective for MinMaxProblem {
    fn value(&self, z: &JointPoint) -> f64 {
        (self.objective)(z)
    }
}

/// Numerically stable `log(1 + exp(t))`.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + exp(-t))`.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
