//! Extragradient solvers: zeroth-order (plain, variance-reduced and
//! `B^{-1}`-preconditioned) plus first-order EG and GDA baselines.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::diagnostics::gradient_mapping_tau;
use crate::exec::Streams;
use crate::geometry::{DualVector, JointPoint, MetricMatrix};
use crate::oracles::{
    averaged_oracle, estimate_operator_mu, sampled_oracle, OracleConfig, OracleError, SampleSchedule,
};
use crate::problems::{MinMaxProblem, ProblemError};

/// Iterates leaving this Euclidean radius abort the run.
pub const DIVERGENCE_RADIUS: f64 = 1e12;
/// Feasibility tolerance used for the start point and trace checks.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Zoeg,
    VrZoeg,
    ModifiedVrZoeg,
    FirstOrderEg,
    Gda,
}

impl Variant {
    pub fn is_zeroth_order(self) -> bool {
        matches!(self, Variant::Zoeg | Variant::VrZoeg | Variant::ModifiedVrZoeg)
    }
}

#[derive(Clone)]
pub enum StepSchedule {
    Constant(f64),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl StepSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Constant(h) => *h,
            StepSchedule::Custom(f) => f(k),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            StepSchedule::Constant(h) => Some(*h),
            StepSchedule::Custom(_) => None,
        }
    }
}

impl fmt::Debug for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Constant(h) => write!(f, "Constant({h})"),
            StepSchedule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// What the trace reports in `diag_norm`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticMode {
    /// `|F|` when unconstrained with analytic `F`, `|tau|` when constrained,
    /// otherwise a Monte-Carlo `|F_mu|` with 16 samples.
    Auto,
    OperatorNorm,
    MappingNorm,
    MonteCarlo { samples: usize },
    DistanceTo(JointPoint),
    Off,
}

/// How iterates are projected back onto the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionPolicy {
    /// `B`-norm projection; requires scalar blocks when constraints are active.
    #[default]
    Metric,
    /// Euclidean projection regardless of `B`.
    Euclidean,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    pub h1: StepSchedule,
    pub h2: StepSchedule,
    pub iterations: usize,
    pub oracle: OracleConfig,
    pub seed: u64,
    pub record_every: usize,
    pub diagnostic: DiagnosticMode,
    pub projection: ProjectionPolicy,
    /// Project an infeasible start point instead of rejecting it.
    pub project_start: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant, h1: f64, h2: f64, iterations: usize, oracle: OracleConfig) -> Self {
        Self {
            variant,
            h1: StepSchedule::Constant(h1),
            h2: StepSchedule::Constant(h2),
            iterations,
            oracle,
            seed: 0,
            record_every: 1,
            diagnostic: DiagnosticMode::Auto,
            projection: ProjectionPolicy::Metric,
            project_start: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_diagnostic(mut self, mode: DiagnosticMode) -> Self {
        self.diagnostic = mode;
        self
    }

    pub fn with_projection(mut self, policy: ProjectionPolicy) -> Self {
        self.projection = policy;
        self
    }

    pub fn with_project_start(mut self, on: bool) -> Self {
        self.project_start = on;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn metric(&self) -> &MetricMatrix {
        &self.oracle.metric
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub z: JointPoint,
    /// Extrapolation point computed from `z`; absent for the final record
    /// and for GDA.
    pub z_hat: Option<JointPoint>,
    /// Noiseless `f(z)`.
    pub f_value: f64,
    pub diag_norm: f64,
    /// Algorithm evaluations spent to reach `z` (function evaluations for
    /// zeroth-order variants, operator evaluations for first-order ones).
    pub cum_evals: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_point: JointPoint,
    pub iterations: usize,
    pub total_evals: u64,
    /// Objective evaluations spent on trace diagnostics only.
    pub diagnostic_evals: u64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("start point is infeasible")]
    InfeasibleStart,
    #[error("variant requires an analytic operator F")]
    MissingOperator,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("evaluation failed at iteration {k}: {source}")]
    Evaluation {
        k: usize,
        source: OracleError,
        partial: Box<RunTrace>,
    },
    #[error("iterate left the radius {DIVERGENCE_RADIUS:e} at iteration {k} (|z| = {norm:e})")]
    Diverged {
        k: usize,
        norm: f64,
        partial: Box<RunTrace>,
    },
}

impl SolverError {
    /// Trace recorded before a runtime failure.
    pub fn partial_trace(&self) -> Option<&RunTrace> {
        match self {
            SolverError::Evaluation { partial, .. } | SolverError::Diverged { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Which of the two oracle calls inside an iteration is being made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Call {
    Extrapolation = 0,
    Update = 1,
}

const DIAG_CALL: u64 = 2;

/// A source of step directions for the extragradient skeleton.
pub trait StepOracle: Sync {
    /// Estimate of `F(z)` for call `call` of iteration `k`, with the
    /// evaluations it spent.
    fn direction(&self, z: &JointPoint, k: usize, call: Call) -> Result<(DualVector, u64), OracleError>;
}

/// One Gaussian direction per call.
pub struct SingleDirection<'a> {
    pub problem: &'a MinMaxProblem,
    pub oracle: &'a OracleConfig,
    pub streams: Streams,
}

impl StepOracle for SingleDirection<'_> {
    fn direction(&self, z: &JointPoint, k: usize, call: Call) -> Result<(DualVector, u64), OracleError> {
        let s = self.streams.fork(k as u64).fork(call as u64);
        let g = sampled_oracle(self.problem, z, self.oracle, k, &s)?;
        Ok((g.value, g.function_evals))
    }
}

/// `t_k` averaged Gaussian directions per call.
pub struct Averaged<'a> {
    pub problem: &'a MinMaxProblem,
    pub oracle: &'a OracleConfig,
    pub streams: Streams,
}

impl StepOracle for Averaged<'_> {
    fn direction(&self, z: &JointPoint, k: usize, call: Call) -> Result<(DualVector, u64), OracleError> {
        let s = self.streams.fork(k as u64).fork(call as u64);
        let g = averaged_oracle(self.problem, z, self.oracle, k, &s)?;
        Ok((g.value, g.function_evals))
    }
}

/// The exact operator `F`; one evaluation per call.
pub struct Analytic<'a> {
    pub problem: &'a MinMaxProblem,
}

impl StepOracle for Analytic<'_> {
    fn direction(&self, z: &JointPoint, _k: usize, _call: Call) -> Result<(DualVector, u64), OracleError> {
        let g = self
            .problem
            .operator(z)
            .ok_or_else(|| OracleError::InvalidConfig("problem has no analytic operator".into()))?;
        if !g.is_finite() {
            return Err(OracleError::EvaluationFailed {
                point: z.clone(),
                value: f64::NAN,
            });
        }
        Ok((g, 1))
    }
}

/// Warnings for step sizes outside the theoretical windows. Checked only
/// when `L1` and `rho` are known, `B = lambda I` and steps are constant.
pub fn validate_step_sizes(problem: &MinMaxProblem, cfg: &SolverConfig) -> Vec<String> {
    let mut out = Vec::new();
    let (Some(l1), Some(rho)) = (problem.metadata.l1, problem.metadata.rho) else {
        return out;
    };
    let lambda = match cfg.metric().scalar_blocks() {
        Some((a, b)) if a == b => a,
        _ => return out,
    };
    let (Some(h1), Some(h2)) = (cfg.h1.constant(), cfg.h2.constant()) else {
        return out;
    };
    if cfg.variant == Variant::Gda {
        return out;
    }
    if problem.set().is_unconstrained() {
        let h1_max = 1.0 / (l1 * lambda);
        let h2_min = (2.0 * rho / (l1 * lambda * lambda)).sqrt();
        if h1 > h1_max {
            out.push(format!("h1 = {h1:e} exceeds 1/(L1 lambda) = {h1_max:e}"));
        }
        if h2 < h2_min || h2 > h1 / 2.0 {
            out.push(format!("h2 = {h2:e} outside [{h2_min:e}, h1/2 = {:e}]", h1 / 2.0));
        }
    } else {
        if h1 != h2 {
            out.push(format!("constrained runs assume h1 = h2, got {h1:e} and {h2:e}"));
        }
        let lo = (6.0 * rho / (l1 * lambda * lambda)).sqrt();
        let hi = 1.0 / (2.0 * l1 * lambda);
        for h in [h1, h2] {
            if h < lo || h > hi {
                out.push(format!("h = {h:e} outside [{lo:e}, {hi:e}]"));
            }
        }
    }
    for w in &out {
        log::warn!("{}: {w}", problem.name());
    }
    out
}

struct Runner<'a> {
    problem: &'a MinMaxProblem,
    cfg: &'a SolverConfig,
    streams: Streams,
    start: Instant,
    trace: RunTrace,
}

impl<'a> Runner<'a> {
    fn new(problem: &'a MinMaxProblem, z0: &JointPoint, cfg: &'a SolverConfig) -> Result<(Self, JointPoint), SolverError> {
        problem.check_dims(z0)?;
        if cfg.record_every == 0 {
            return Err(SolverError::InvalidConfig("record_every must be at least 1".into()));
        }
        if cfg.variant.is_zeroth_order() {
            cfg.oracle
                .validate()
                .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
            if cfg.variant == Variant::Zoeg && cfg.oracle.samples != SampleSchedule::Constant(1) {
                return Err(SolverError::InvalidConfig(
                    "ZO-EG uses one direction per call; use VR-ZO-EG for t > 1".into(),
                ));
            }
        } else if !problem.has_operator() {
            return Err(SolverError::MissingOperator);
        }
        if cfg.metric().dims() != problem.dims() {
            return Err(SolverError::InvalidConfig(format!(
                "metric dims {:?} differ from problem dims {:?}",
                cfg.metric().dims(),
                problem.dims()
            )));
        }
        for k in [0, cfg.iterations.saturating_sub(1)] {
            let (a, b) = (cfg.h1.at(k), cfg.h2.at(k));
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(SolverError::InvalidConfig(format!("step sizes must be positive, got {a}, {b} at k = {k}")));
            }
        }
        let runner = Self {
            problem,
            cfg,
            streams: Streams::new(cfg.seed),
            start: Instant::now(),
            trace: RunTrace {
                records: Vec::new(),
                final_point: z0.clone(),
                iterations: 0,
                total_evals: 0,
                diagnostic_evals: 0,
                seed: cfg.seed,
                warnings: validate_step_sizes(problem, cfg),
            },
        };
        let z = if problem.contains(z0, FEASIBILITY_TOL) {
            z0.clone()
        } else if cfg.project_start {
            runner.project(z0)?
        } else {
            return Err(SolverError::InfeasibleStart);
        };
        Ok((runner, z))
    }

    fn project(&self, z: &JointPoint) -> Result<JointPoint, ProblemError> {
        match self.cfg.projection {
            ProjectionPolicy::Metric => self.problem.project(z, self.cfg.metric()),
            ProjectionPolicy::Euclidean => Ok(self.problem.set().project_euclidean(z)),
        }
    }

    fn step(&self, z: &JointPoint, h: f64, g: &DualVector, precondition: bool) -> Result<JointPoint, ProblemError> {
        let dir = if precondition {
            self.cfg.metric().apply_inverse(g)
        } else {
            g.clone()
        };
        self.project(&z.axpy(-h, &dir))
    }

    fn monte_carlo_norm(&mut self, z: &JointPoint, k: usize, samples: usize) -> Result<f64, OracleError> {
        let s = self.streams.fork(k as u64).fork(DIAG_CALL);
        let oracle = &self.cfg.oracle;
        let est = estimate_operator_mu(self.problem, z, oracle.mu_at(k), samples, &oracle.metric, &s, oracle.execution)?;
        self.trace.diagnostic_evals += samples as u64 + 1;
        Ok(est.mean.norm())
    }

    fn diagnostic(&mut self, z: &JointPoint, k: usize) -> Result<f64, OracleError> {
        let p = self.problem;
        let cfg = self.cfg;
        let (n, m) = p.dims();
        let mapping = |g: DualVector| -> Result<f64, OracleError> {
            // Under the Euclidean override the mapping uses the same projection as the steps.
            let identity;
            let metric = match cfg.projection {
                ProjectionPolicy::Metric => cfg.metric(),
                ProjectionPolicy::Euclidean => {
                    identity = MetricMatrix::identity(n, m);
                    &identity
                }
            };
            let tau = gradient_mapping_tau(p, z, cfg.h1.at(k), cfg.h2.at(k), &g, metric)
                .map_err(|e| OracleError::InvalidConfig(e.to_string()))?;
            Ok(tau.norm())
        };
        match &cfg.diagnostic {
            DiagnosticMode::Off => Ok(0.0),
            DiagnosticMode::DistanceTo(target) => Ok((z - target).norm()),
            DiagnosticMode::MonteCarlo { samples } => self.monte_carlo_norm(z, k, *samples),
            DiagnosticMode::OperatorNorm => match p.operator(z) {
                Some(g) => Ok(g.norm()),
                None => self.monte_carlo_norm(z, k, 16),
            },
            DiagnosticMode::MappingNorm => match p.operator(z) {
                Some(g) => mapping(g),
                None => Err(OracleError::InvalidConfig("mapping norm needs an analytic operator".into())),
            },
            DiagnosticMode::Auto => match p.operator(z) {
                Some(g) if p.set().is_unconstrained() => Ok(g.norm()),
                Some(g) => mapping(g),
                None => self.monte_carlo_norm(z, k, 16),
            },
        }
    }

    fn record(&mut self, k: usize, z: &JointPoint, z_hat: Option<JointPoint>) -> Result<(), OracleError> {
        let f_value = self.problem.value(z);
        self.trace.diagnostic_evals += 1;
        let diag_norm = self.diagnostic(z, k)?;
        self.trace.records.push(TraceRecord {
            k,
            z: z.clone(),
            z_hat,
            f_value,
            diag_norm,
            cum_evals: self.trace.total_evals,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    fn fail(mut self, k: usize, z: &JointPoint, source: OracleError) -> SolverError {
        self.trace.final_point = z.clone();
        self.trace.iterations = k;
        SolverError::Evaluation {
            k,
            source,
            partial: Box::new(self.trace),
        }
    }

    fn finish(mut self, z: JointPoint, n: usize) -> RunTrace {
        self.trace.final_point = z;
        self.trace.iterations = n;
        self.trace
    }

    fn guard(self, k: usize, z: &JointPoint) -> Result<Self, SolverError> {
        let norm = z.norm();
        if !norm.is_finite() || norm > DIVERGENCE_RADIUS {
            let mut trace = self.trace;
            trace.final_point = z.clone();
            trace.iterations = k;
            return Err(SolverError::Diverged {
                k,
                norm,
                partial: Box::new(trace),
            });
        }
        Ok(self)
    }
}

/// Generic extragradient loop:
/// `z_hat = Proj(z - h1 D(z))`, `z+ = Proj(z - h2 D(z_hat))`, where `D` is
/// `oracle` optionally left-multiplied by `B^{-1}`.
pub fn run_extragradient(
    problem: &MinMaxProblem,
    z0: &JointPoint,
    cfg: &SolverConfig,
    oracle: &dyn StepOracle,
    precondition: bool,
) -> Result<RunTrace, SolverError> {
    let (mut run, mut z) = Runner::new(problem, z0, cfg)?;
    let n = cfg.iterations;
    for k in 0..=n {
        let recording = k % cfg.record_every == 0;
        if k == n {
            if recording {
                if let Err(e) = run.record(k, &z, None) {
                    return Err(run.fail(k, &z, e));
                }
            }
            break;
        }
        let (g, e1) = match oracle.direction(&z, k, Call::Extrapolation) {
            Ok(v) => v,
            Err(e) => return Err(run.fail(k, &z, e)),
        };
        let z_hat = run.step(&z, cfg.h1.at(k), &g, precondition)?;
        if recording {
            if let Err(e) = run.record(k, &z, Some(z_hat.clone())) {
                return Err(run.fail(k, &z, e));
            }
        }
        let (g_hat, e2) = match oracle.direction(&z_hat, k, Call::Update) {
            Ok(v) => v,
            Err(e) => return Err(run.fail(k, &z, e)),
        };
        let next = run.step(&z, cfg.h2.at(k), &g_hat, precondition)?;
        run.trace.total_evals += e1 + e2;
        run = run.guard(k + 1, &next)?;
        z = next;
    }
    Ok(run.finish(z, n))
}

/// Projected gradient descent-ascent `z+ = Proj(z - h1 F(z))`.
pub fn run_gda(problem: &MinMaxProblem, z0: &JointPoint, cfg: &SolverConfig) -> Result<RunTrace, SolverError> {
    let (mut run, mut z) = Runner::new(problem, z0, cfg)?;
    let oracle = Analytic { problem };
    let n = cfg.iterations;
    for k in 0..=n {
        if k % cfg.record_every == 0 {
            if let Err(e) = run.record(k, &z, None) {
                return Err(run.fail(k, &z, e));
            }
        }
        if k == n {
            break;
        }
        let (g, e) = match oracle.direction(&z, k, Call::Update) {
            Ok(v) => v,
            Err(e) => return Err(run.fail(k, &z, e)),
        };
        let next = run.step(&z, cfg.h1.at(k), &g, false)?;
        run.trace.total_evals += e;
        run = run.guard(k + 1, &next)?;
        z = next;
    }
    Ok(run.finish(z, n))
}

/// Zeroth-order extragradient with one Gaussian direction per call.
pub fn run_zoeg(problem: &MinMaxProblem, z0: &JointPoint, cfg: &SolverConfig) -> Result<RunTrace, SolverError> {
    let oracle = SingleDirection {
        problem,
        oracle: &cfg.oracle,
        streams: Streams::new(cfg.seed),
    };
    run_extragradient(problem, z0, cfg, &oracle, false)
}

/// Zeroth-order extragradient averaging `t_k` directions per call.
pub fn run_vr_zoeg(problem: &MinMaxProblem, z0: &JointPoint, cfg: &SolverConfig) -> Result<RunTrace, SolverError> {
    let oracle = Averaged {
        problem,
        oracle: &cfg.oracle,
        streams: Streams::new(cfg.seed),
    };
    run_extragradient(problem, z0, cfg, &oracle, false)
}

/// Variance-reduced zeroth-order extragradient with `B^{-1}`-preconditioned steps.
pub fn run_modified_vr_zoeg(
    problem: &MinMaxProblem,
    z0: &JointPoint,
    cfg: &SolverConfig,
) -> Result<RunTrace, SolverError> {
    let oracle = Averaged {
        problem,
        oracle: &cfg.oracle,
        streams: Streams::new(cfg.seed),
    };
    run_extragradient(problem, z0, cfg, &oracle, true)
}

/// Extragradient with the analytic operator.
pub fn run_first_order_eg(
    problem: &MinMaxProblem,
    z0: &JointPoint,
    cfg: &SolverConfig,
) -> Result<RunTrace, SolverError> {
    if !problem.has_operator() {
        return Err(SolverError::MissingOperator);
    }
    run_extragradient(problem, z0, cfg, &Analytic { problem }, false)
}

/// Dispatches on `cfg.variant`.
pub fn run(problem: &MinMaxProblem, z0: &JointPoint, cfg: &SolverConfig) -> Result<RunTrace, SolverError> {
    match cfg.variant {
        Variant::Zoeg => run_zoeg(problem, z0, cfg),
        Variant::VrZoeg => run_vr_zoeg(problem, z0, cfg),
        Variant::ModifiedVrZoeg => run_modified_vr_zoeg(problem, z0, cfg),
        Variant::FirstOrderEg => run_first_order_eg(problem, z0, cfg),
        Variant::Gda => run_gda(problem, z0, cfg),
    }
}
