//! Two-dimensional test problems.

use crate::geometry::{DualVector, JointPoint};

use super::{sigmoid, softplus, FeasibleSet, MinMaxProblem, ProblemMetadata};

fn scalar(z: &JointPoint) -> (f64, f64) {
    (z.x[0], z.y[0])
}

/// `f1(x, y) = 2x^2 - 2y^2 + 4xy + 10 sin(xy)`, unconstrained.
pub fn toy_f1() -> MinMaxProblem {
    MinMaxProblem::new("toy_f1", 1, 1, |z: &JointPoint| {
        let (x, y) = scalar(z);
        2.0 * x * x - 2.0 * y * y + 4.0 * x * y + 10.0 * (x * y).sin()
    })
    .with_operator(|z: &JointPoint| {
        let (x, y) = scalar(z);
        let c = (x * y).cos();
        let gx = 4.0 * x + 4.0 * y + 10.0 * y * c;
        let gy = -4.0 * y + 4.0 * x + 10.0 * x * c;
        DualVector::from_slices(&[gx], &[-gy])
    })
    .with_metadata(ProblemMetadata {
        z_star: Some(JointPoint::from_slices(&[0.0], &[0.0])),
        ..Default::default()
    })
}

/// `f2(x, y) = log(1 + e^x) + 3xy - log(1 + e^y)` on `|x| <= 3, |y| <= 2`.
pub fn toy_f2() -> MinMaxProblem {
    // Hessian [[s(x), 3], [3, -s(y)]] with 0 < s <= 1/4.
    let l1 = (0.25 + (0.0625 + 36.0f64).sqrt()) / 2.0;
    MinMaxProblem::new("toy_f2", 1, 1, |z: &JointPoint| {
        let (x, y) = scalar(z);
        softplus(x) + 3.0 * x * y - softplus(y)
    })
    .with_operator(|z: &JointPoint| {
        let (x, y) = scalar(z);
        let gx = sigmoid(x) + 3.0 * y;
        let gy = 3.0 * x - sigmoid(y);
        DualVector::from_slices(&[gx], &[-gy])
    })
    .with_set(FeasibleSet::symmetric_box(1, 1, 3.0, 2.0))
    .expect("valid box")
    .with_metadata(ProblemMetadata {
        l1: Some(l1),
        ..Default::default()
    })
}

/// `f3(x, y) = |x^3 - 1| - |y^3 + 1|`, nonsmooth with min-max point `(1, -1)`.
///
/// `l0` is the Lipschitz constant over the probe box `[-10, 10]^2`.
pub fn toy_f3() -> MinMaxProblem {
    let half = 10.0;
    MinMaxProblem::new("toy_f3", 1, 1, |z: &JointPoint| {
        let (x, y) = scalar(z);
        (x.powi(3) - 1.0).abs() - (y.powi(3) + 1.0).abs()
    })
    .with_metadata(ProblemMetadata {
        l0: Some(3.0 * half * half * 2f64.sqrt()),
        z_star: Some(JointPoint::from_slices(&[1.0], &[-1.0])),
        probe_box: Some((vec![-half, -half], vec![half, half])),
        ..Default::default()
    })
}

/// `f(x, y) = x^T y` on `R^k x R^k` (or on the orthant when `orthant`).
pub fn bilinear_problem(k: usize, orthant: bool) -> MinMaxProblem {
    let p = MinMaxProblem::new("bilinear", k, k, |z: &JointPoint| z.x.dot(&z.y))
        .with_operator(|z: &JointPoint| DualVector::new(z.y.clone(), -&z.x))
        .with_metadata(ProblemMetadata {
            l1: Some(1.0),
            rho: Some(0.0),
            z_star: Some(JointPoint::zeros(k, k)),
            ..Default::default()
        });
    if orthant {
        p.with_set(FeasibleSet::NonnegativeOrthant).expect("valid orthant")
    } else {
        p
    }
}
