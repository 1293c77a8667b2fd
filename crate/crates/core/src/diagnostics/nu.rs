//! Right-hand sides of the convergence bounds as functions of the metric's
//! extreme eigenvalues and the step size, used to tune `B`.
//!
//! `l_bar` is the Lipschitz constant of the gradient in the Euclidean norm,
//! so the `B`-norm constant is `L1 = l_bar / lambda_max`.

use super::{nonnegative, positive, DiagnosticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuSetting {
    Unconstrained,
    Constrained,
    Nonsmooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuParams {
    pub l_bar: f64,
    pub rho: f64,
    /// `|z_0 - z*|^2`.
    pub r0_sq: f64,
    pub iterations: u64,
    pub mu: f64,
    pub d: usize,
    pub sigma: f64,
    /// Samples per oracle call.
    pub t: u64,
    /// Feasible-set diameter; only used by the constrained setting.
    pub d_z: f64,
}

impl NuParams {
    fn validate(&self) -> Result<(), DiagnosticsError> {
        positive("l_bar", self.l_bar)?;
        nonnegative("rho", self.rho)?;
        nonnegative("|z0 - z*|^2", self.r0_sq)?;
        nonnegative("mu", self.mu)?;
        nonnegative("sigma", self.sigma)?;
        nonnegative("D_z", self.d_z)?;
        if self.t == 0 {
            return Err(DiagnosticsError::InvalidInput("t must be at least 1".into()));
        }
        Ok(())
    }

    fn a(&self) -> f64 {
        2.0 * self.r0_sq / (self.iterations as f64 + 1.0)
    }
}

/// Evaluates the bound at `(lambda_min, lambda_max, h)`.
pub fn nu_bound(
    setting: NuSetting,
    p: &NuParams,
    lambda_min: f64,
    lambda_max: f64,
    h: f64,
) -> Result<f64, DiagnosticsError> {
    p.validate()?;
    positive("lambda_min", lambda_min)?;
    positive("h", h)?;
    if lambda_max < lambda_min {
        return Err(DiagnosticsError::InvalidInput(format!(
            "lambda_max = {lambda_max} is below lambda_min = {lambda_min}"
        )));
    }
    let (lo, hi) = (lambda_min, lambda_max);
    let kappa = hi / lo;
    let l1 = p.l_bar / hi;
    let d = p.d as f64;
    let t = p.t as f64;
    let a = p.a();
    let core = lo * hi * l1 * kappa;
    let (den, num) = match setting {
        NuSetting::Unconstrained => {
            let b = 2.0 * p.mu * p.mu * d;
            let c = 2.0 * p.mu * p.mu * p.rho * (d + 3.0).powi(3);
            let e = 3.0 * p.sigma * p.sigma / t;
            let den = core * h * h - 2.0 * p.rho;
            (den, core * a + lo * l1 * b + lo * l1 * l1 * c + lo * e / (l1 * kappa))
        }
        NuSetting::Constrained => {
            let b = p.mu * p.d_z * (d + 3.0).powf(1.5);
            let c = p.mu * p.mu * p.rho * (d + 3.0).powi(3);
            let e = p.sigma * p.sigma / t;
            let pp = 2.0 * p.d_z * p.sigma / t.sqrt();
            let den = core * h * h - 6.0 * p.rho;
            let num = core * a
                + lo * kappa * l1 * b
                + lo * kappa * kappa * l1 * l1 * c
                + (36.0 * p.rho * kappa * kappa * lo + 4.0 * lo / l1) * e
                + lo * kappa * pp;
            (den, num)
        }
        NuSetting::Nonsmooth => {
            let b = 3.0 * p.sigma * p.sigma / t;
            let den = core * h * h - p.rho;
            (den, core * a + lo * b / (l1 * kappa))
        }
    };
    if !(den > 0.0) {
        return Err(DiagnosticsError::Infeasible(format!("bound denominator {den:e} is not positive")));
    }
    Ok(num / den)
}

/// Barred constants of the `rho = 0`, `kappa = 1` closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuConstants {
    pub a_bar: f64,
    pub b_bar: f64,
    pub e_bar: f64,
    /// Additive noise term of the constrained bound; zero elsewhere.
    pub p: f64,
}

pub fn nu_constants(setting: NuSetting, p: &NuParams) -> NuConstants {
    let l = p.l_bar;
    let d = p.d as f64;
    let t = p.t as f64;
    let a_bar = l * p.a();
    match setting {
        NuSetting::Unconstrained => NuConstants {
            a_bar,
            b_bar: l * 2.0 * p.mu * p.mu * d,
            e_bar: 3.0 * p.sigma * p.sigma / t / l,
            p: 0.0,
        },
        NuSetting::Constrained => NuConstants {
            a_bar,
            b_bar: l * p.mu * p.d_z * (d + 3.0).powf(1.5),
            e_bar: 4.0 * p.sigma * p.sigma / t / l,
            p: 2.0 * p.d_z * p.sigma / t.sqrt(),
        },
        NuSetting::Nonsmooth => NuConstants {
            a_bar,
            b_bar: 3.0 * p.sigma * p.sigma / t / l,
            e_bar: 0.0,
            p: 0.0,
        },
    }
}

/// Optimal common eigenvalue of `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaStar {
    Value(f64),
    /// The bound decreases all the way to `lambda -> 0`.
    TendsToZero,
    /// The bound decreases as `lambda -> infinity` (no noise term).
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuOptimum {
    /// `1 / (2 l_bar kappa)` at `kappa = 1`.
    pub h_star: f64,
    pub lambda_star: LambdaStar,
    pub kappa_star: f64,
    /// Bound value at the optimum (its limit when `lambda* -> 0`).
    pub value: f64,
}

/// Closed-form minimiser for `rho = 0`.
pub fn nu_optimize(setting: NuSetting, p: &NuParams) -> Result<NuOptimum, DiagnosticsError> {
    p.validate()?;
    if p.rho != 0.0 {
        return Err(DiagnosticsError::InvalidInput(
            "closed-form optimum exists only for rho = 0".into(),
        ));
    }
    let c = nu_constants(setting, p);
    let four_l = 4.0 * p.l_bar;
    let h_star = 1.0 / (2.0 * p.l_bar);
    let (lambda_star, value) = match setting {
        NuSetting::Nonsmooth => (LambdaStar::TendsToZero, four_l * c.a_bar),
        _ => {
            let lam = if c.b_bar == 0.0 {
                LambdaStar::TendsToZero
            } else if c.e_bar == 0.0 {
                LambdaStar::Unbounded
            } else {
                LambdaStar::Value((c.b_bar / c.e_bar).sqrt())
            };
            (lam, four_l * (c.p + c.a_bar + 2.0 * (c.b_bar * c.e_bar).sqrt()))
        }
    };
    Ok(NuOptimum {
        h_star,
        lambda_star,
        kappa_star: 1.0,
        value,
    })
}
