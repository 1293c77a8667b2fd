//! Empirical checks of the weak and proximal Minty variational inequalities.
//!
//! Norms and projections here are Euclidean.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::exec::{Execution, Streams};
use crate::geometry::{DualVector, JointPoint};
use crate::problems::{MinMaxProblem, OperatorFn};

use super::{nonnegative, positive, DiagnosticsError};

/// Where the operator values `F` come from.
#[derive(Clone)]
pub enum GradientSource {
    /// The problem's analytic operator.
    Analytic,
    /// Central finite differences with the given step.
    CentralDifference { step: f64 },
    Custom(OperatorFn),
}

impl std::fmt::Debug for GradientSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GradientSource::Analytic => write!(f, "Analytic"),
            GradientSource::CentralDifference { step } => write!(f, "CentralDifference({step})"),
            GradientSource::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl GradientSource {
    fn eval(&self, problem: &MinMaxProblem, z: &JointPoint) -> Result<DualVector, DiagnosticsError> {
        let g = match self {
            GradientSource::Analytic => problem
                .operator(z)
                .ok_or_else(|| DiagnosticsError::InvalidInput("problem has no analytic operator".into()))?,
            GradientSource::CentralDifference { step } => problem.finite_difference_operator(z, *step),
            GradientSource::Custom(op) => op(z),
        };
        if !g.is_finite() {
            return Err(DiagnosticsError::InvalidInput(format!("operator is not finite at {z:?}")));
        }
        Ok(g)
    }
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal bins over `[min, max]` of `values`; a single degenerate
    /// bin when all values coincide.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self { edges: vec![], counts: vec![] };
        }
        if hi <= lo {
            return Self {
                edges: vec![lo, hi],
                counts: vec![values.len()],
            };
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        edges.push(hi);
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }

    /// Writes `bin_left,bin_right,count` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([
                format!("{:e}", self.edges[i]),
                format!("{:e}", self.edges[i + 1]),
                c.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MviReport {
    pub samples: usize,
    pub min_value: f64,
    /// Fraction of values below `-tolerance`.
    pub violating_fraction: f64,
    pub rho_used: f64,
    pub tolerance: f64,
    pub values: Vec<f64>,
    pub histogram: Histogram,
}

impl MviReport {
    fn from_values(values: Vec<f64>, rho: f64, tolerance: f64, bins: usize) -> Self {
        let violating = values.iter().filter(|&&v| v < -tolerance).count();
        Self {
            samples: values.len(),
            min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
            violating_fraction: violating as f64 / values.len() as f64,
            rho_used: rho,
            tolerance,
            histogram: Histogram::from_values(&values, bins),
            values,
        }
    }
}

/// Parameters of a sampling study.
#[derive(Debug, Clone)]
pub struct MviStudy {
    pub count: usize,
    /// Step `h` inside the proximal operator `Q`.
    pub h: f64,
    pub rho: f64,
    /// Per-coordinate sampling variances (length `n + m`).
    pub variances: Vec<f64>,
    pub gradient: GradientSource,
    pub bins: usize,
    /// Values in `[-tolerance, 0)` count as rounding noise, not violations.
    pub tolerance: f64,
    pub execution: Execution,
}

impl MviStudy {
    pub fn new(count: usize, h: f64, variances: Vec<f64>) -> Self {
        Self {
            count,
            h,
            rho: 0.0,
            variances,
            gradient: GradientSource::Analytic,
            bins: 50,
            tolerance: 1e-12,
            execution: Execution::default(),
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_gradient(mut self, gradient: GradientSource) -> Self {
        self.gradient = gradient;
        self
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self, d: usize) -> Result<(), DiagnosticsError> {
        if self.count == 0 {
            return Err(DiagnosticsError::InvalidInput("sample count must be at least 1".into()));
        }
        positive("h", self.h)?;
        nonnegative("rho", self.rho)?;
        nonnegative("tolerance", self.tolerance)?;
        if self.variances.len() != d {
            return Err(DiagnosticsError::InvalidInput(format!(
                "expected {d} sampling variances, got {}",
                self.variances.len()
            )));
        }
        for &v in &self.variances {
            nonnegative("sampling variance", v)?;
        }
        Ok(())
    }
}

fn gaussian_around<R: Rng>(center: &JointPoint, std: &[f64], rng: &mut R) -> JointPoint {
    let mut z = center.clone();
    for (i, s) in std.iter().enumerate() {
        let w: f64 = rng.sample(StandardNormal);
        z.set(i, center.get(i) + s * w);
    }
    z
}

/// `Q(u, h, g) = (u - Proj(u - h g)) / h` with the Euclidean projection.
fn prox_operator(problem: &MinMaxProblem, u: &JointPoint, h: f64, g: &DualVector) -> DualVector {
    let p = problem.set().project_euclidean(&u.axpy(-h, g));
    (u - &p).scale(1.0 / h)
}

/// Proximal MVI functional `<Q(u, h, F(u_bar)), u_bar - z_c> + rho/2 |Q|^2`
/// over `count` independent pairs drawn around `z_c` and projected onto the
/// feasible set. Pair `j` uses `streams.rng(j)`.
pub fn prox_mvi_sampler(
    problem: &MinMaxProblem,
    z_candidate: &JointPoint,
    study: &MviStudy,
    streams: &Streams,
) -> Result<MviReport, DiagnosticsError> {
    problem.check_dims(z_candidate)?;
    study.validate(problem.dim())?;
    let std: Vec<f64> = study.variances.iter().map(|v| v.sqrt()).collect();
    let set = problem.set();
    let values = study.execution.try_map(study.count, |j| {
        let mut rng = streams.rng(j as u64);
        let u = set.project_euclidean(&gaussian_around(z_candidate, &std, &mut rng));
        let u_bar = set.project_euclidean(&gaussian_around(z_candidate, &std, &mut rng));
        let g = study.gradient.eval(problem, &u_bar)?;
        let q = prox_operator(problem, &u, study.h, &g);
        Ok::<_, DiagnosticsError>((&u_bar - z_candidate).dot(&q) + 0.5 * study.rho * q.norm_squared())
    })?;
    Ok(MviReport::from_values(values, study.rho, study.tolerance, study.bins))
}

/// Weak MVI functional `<F(z), z - z*> + rho/2 |F(z)|^2` at `count` points
/// drawn uniformly from the box `(lower, upper)`.
#[allow(clippy::too_many_arguments)]
pub fn weak_mvi_sampler(
    problem: &MinMaxProblem,
    z_star: &JointPoint,
    rho: f64,
    count: usize,
    bounds: (&[f64], &[f64]),
    gradient: &GradientSource,
    streams: &Streams,
    execution: Execution,
) -> Result<MviReport, DiagnosticsError> {
    problem.check_dims(z_star)?;
    nonnegative("rho", rho)?;
    if count == 0 {
        return Err(DiagnosticsError::InvalidInput("sample count must be at least 1".into()));
    }
    let (lower, upper) = bounds;
    let d = problem.dim();
    if lower.len() != d || upper.len() != d || lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(DiagnosticsError::InvalidInput(format!("probe box must be {d}-dimensional and ordered")));
    }
    let values = execution.try_map(count, |j| {
        let mut rng = streams.rng(j as u64);
        let flat: Vec<f64> = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect();
        let z = JointPoint::from_flat(&flat, z_star.n());
        let g = gradient.eval(problem, &z)?;
        Ok::<_, DiagnosticsError>((&z - z_star).dot(&g) + 0.5 * rho * g.norm_squared())
    })?;
    Ok(MviReport::from_values(values, rho, 1e-12, 50))
}
