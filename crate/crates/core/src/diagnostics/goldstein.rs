//! Goldstein-stationarity certificate through the smoothed gradient.
//!
//! For `L0`-Lipschitz `f`, `B = I`, `0 < delta < 1`, `0 < gamma <= min(5 L0, 1)`
//! and `mu <= delta / sqrt(d pi e) (gamma / (4 L0))^{1/d}`, the smoothed
//! gradient lies within `gamma` of the `delta`-Goldstein subdifferential.
//! Hence `dist(0, d_delta f(z)) <= ||grad f_mu(z)|| + gamma`.

use crate::exec::{Execution, Streams};
use crate::geometry::{JointPoint, MetricMatrix};
use crate::oracles::estimate_operator_mu;
use crate::problems::MinMaxProblem;

use super::{positive, DiagnosticsError, StationarityReport};

/// Largest admissible `mu` for target `epsilon` (with `gamma = epsilon / 2`).
pub fn goldstein_mu(delta: f64, epsilon: f64, l0: f64, d: usize) -> f64 {
    let d = d as f64;
    delta / (d * std::f64::consts::PI * std::f64::consts::E).sqrt() * (epsilon / (8.0 * l0)).powf(1.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldsteinCertificate {
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `||F_mu(z)||` Monte-Carlo estimate.
    pub estimate: f64,
    /// Euclidean norm of the per-coordinate standard errors.
    pub std_error: f64,
    /// `estimate + gamma + 3 std_error`, an upper bound on
    /// `dist(0, d_delta f(z))` up to Monte-Carlo failure probability.
    pub bound: f64,
}

/// Certifies `(delta, eps)`-Goldstein stationarity of `z` using `samples`
/// forward-difference draws.
#[allow(clippy::too_many_arguments)]
pub fn goldstein_surrogate(
    problem: &MinMaxProblem,
    z: &JointPoint,
    delta: f64,
    epsilon: f64,
    l0: f64,
    samples: usize,
    metric: &MetricMatrix,
    streams: &Streams,
    exec: Execution,
) -> Result<StationarityReport, DiagnosticsError> {
    if !metric.is_identity() {
        return Err(DiagnosticsError::UnsupportedMetric(
            "the Goldstein certificate holds only for B = I".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DiagnosticsError::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    positive("epsilon", epsilon)?;
    positive("L0", l0)?;
    let gamma = epsilon / 2.0;
    if gamma > (5.0 * l0).min(1.0) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "gamma = epsilon/2 = {gamma} exceeds min(5 L0, 1)"
        )));
    }
    problem.check_dims(z)?;
    let mut warnings = Vec::new();
    if let Some((lo, hi)) = &problem.metadata.probe_box {
        let inside = z.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= v && v <= *b);
        if !inside {
            let w = format!("{}: point lies outside the box on which L0 was computed", problem.name());
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let mu = goldstein_mu(delta, epsilon, l0, problem.dim());
    let est = estimate_operator_mu(problem, z, mu, samples, metric, streams, exec)?;
    let estimate = est.mean.norm();
    let std_error = est.error_norm();
    let cert = GoldsteinCertificate {
        delta,
        gamma,
        mu,
        estimate,
        std_error,
        bound: estimate + gamma + 3.0 * std_error,
    };
    Ok(StationarityReport {
        grad_norm: estimate,
        mapping_norm: None,
        goldstein: Some(cert),
        evals_spent: samples as u64 + 1,
        warnings,
    })
}
