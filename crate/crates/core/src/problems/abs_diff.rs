//! `f(x, y) = |x| - |y|` and its exactly known smoothed operator.

use libm::erfc;

use crate::geometry::{DualVector, JointPoint};

use super::{MinMaxProblem, ProblemMetadata};

fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

/// The nonsmooth scalar problem `|x| - |y|` with `z* = (0, 0)`.
pub fn abs_diff_problem() -> MinMaxProblem {
    MinMaxProblem::new("abs_diff", 1, 1, |z: &JointPoint| z.x[0].abs() - z.y[0].abs()).with_metadata(
        ProblemMetadata {
            l0: Some(std::f64::consts::SQRT_2),
            rho: Some(0.0),
            z_star: Some(JointPoint::zeros(1, 1)),
            ..Default::default()
        },
    )
}

/// Exact `F_mu(z)` when directions are drawn from `N(0, sigma^2 I)`, i.e.
/// `B = sigma^{-2} I`: each block entry is `1 - 2 Phi(-v / (mu sigma))`.
pub fn abs_diff_operator_mu(z: &JointPoint, mu: f64, sigma: f64) -> DualVector {
    let s = mu * sigma;
    z.map(|v| 1.0 - 2.0 * std_normal_cdf(-v / s))
}
