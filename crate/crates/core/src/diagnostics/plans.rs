//! Hyperparameter calculators for `B = lambda I` (or `B = I`): admissible
//! smoothing parameter, iteration count and per-iteration sample count for
//! a target accuracy `epsilon`.

use std::f64::consts::PI;

use super::goldstein::goldstein_mu;
use super::{nonnegative, positive, DiagnosticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanSource {
    Unconstrained,
    UnconstrainedVr,
    Constrained,
    ConstrainedVr,
    Nonsmooth,
    NonsmoothVr,
    HarmonicMu,
}

impl PlanSource {
    pub fn describe(self) -> &'static str {
        match self {
            PlanSource::Unconstrained => "unconstrained ZO-EG",
            PlanSource::UnconstrainedVr => "unconstrained VR-ZO-EG",
            PlanSource::Constrained => "constrained ZO-EG",
            PlanSource::ConstrainedVr => "constrained VR-ZO-EG",
            PlanSource::Nonsmooth => "nonsmooth ZO-EG (Goldstein)",
            PlanSource::NonsmoothVr => "nonsmooth VR-ZO-EG (Goldstein)",
            PlanSource::HarmonicMu => "unconstrained ZO-EG with mu_k = l/(k+1)",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperparamPlan {
    pub mu_max: f64,
    pub n_min: u64,
    pub t_min: Option<u64>,
    /// Admissible open-closed interval `(low, high]` for the update step.
    pub h_window: (f64, f64),
    /// Largest admissible extrapolation step.
    pub h1_max: f64,
    /// `L1(f_mu)` for nonsmooth plans.
    pub smoothed_l1: Option<f64>,
    pub source: PlanSource,
    pub warnings: Vec<String>,
}

fn ceil_count(v: f64) -> Result<u64, DiagnosticsError> {
    if !v.is_finite() || v >= u64::MAX as f64 {
        return Err(DiagnosticsError::Infeasible(format!("count {v} overflows")));
    }
    Ok(v.ceil().max(0.0) as u64)
}

fn iterations(v: f64) -> Result<u64, DiagnosticsError> {
    Ok(ceil_count(v)?.max(1))
}

fn check_window(low: f64, high: f64, h: f64, what: &str, warnings: &mut Vec<String>) -> Result<(), DiagnosticsError> {
    if !(low < high) {
        return Err(DiagnosticsError::Infeasible(format!("{what} window ({low:e}, {high:e}] is empty")));
    }
    if h <= low {
        return Err(DiagnosticsError::Infeasible(format!(
            "{what} = {h:e} is at or below the lower end {low:e}; the bound's denominator is not positive"
        )));
    }
    if h > high * (1.0 + 1e-12) {
        warnings.push(format!("{what} = {h:e} exceeds the window top {high:e}"));
    }
    Ok(())
}

fn rho_range(rho: f64, limit: f64, warnings: &mut Vec<String>) {
    if rho >= limit {
        warnings.push(format!("rho = {rho:e} is outside the admissible range [0, {limit:e})"));
    }
}

/// Inputs for the unconstrained smooth plan. `sigma: None` plans plain
/// ZO-EG, `Some(_)` plans VR-ZO-EG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnconstrainedInput {
    pub l1: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub h2: f64,
    /// Joint dimension `n + m`.
    pub d: usize,
    pub sigma: Option<f64>,
}

/// Guarantee on `E |F(z_hat)|^2`.
pub fn plan_unconstrained(p: &UnconstrainedInput) -> Result<HyperparamPlan, DiagnosticsError> {
    positive("L1", p.l1)?;
    nonnegative("rho", p.rho)?;
    positive("lambda", p.lambda)?;
    positive("r0", p.r0)?;
    positive("epsilon", p.epsilon)?;
    positive("h2", p.h2)?;
    if let Some(s) = p.sigma {
        nonnegative("sigma", s)?;
    }
    let (l1, rho, lam, eps) = (p.l1, p.rho, p.lambda, p.epsilon);
    let d = p.d as f64;
    let mut warnings = Vec::new();
    rho_range(rho, 1.0 / (8.0 * l1), &mut warnings);
    let h1_max = 1.0 / (l1 * lam);
    let low = (2.0 * rho / (l1 * lam * lam)).sqrt();
    check_window(low, h1_max / 2.0, p.h2, "h2", &mut warnings)?;
    let den = lam * lam * l1 * p.h2 * p.h2 - 2.0 * rho;
    let d3 = (d + 3.0).powi(3);
    let (n_coef, mu_root, mu_coef) = match p.sigma {
        None => (8.0, 2f64.sqrt(), 16.0),
        Some(_) => (12.0, 3f64.sqrt(), 24.0),
    };
    let mu_a = eps / (mu_root * lam * l1 * (d + 3.0).powf(1.5));
    let mu_b = (den / (mu_coef * lam * l1 * d + mu_coef * lam * l1 * l1 * rho * d3)).sqrt() * eps;
    let n_min = iterations(n_coef * lam * lam * l1 * p.r0 * p.r0 / den / (eps * eps) - 1.0)?;
    let t_min = match p.sigma {
        None => None,
        Some(s) => {
            let t = 18.0 * lam * s * s / (lam * lam * l1 * (l1 * p.h2 * p.h2 - 2.0 * rho)) / (eps * eps);
            if !(t >= 0.0) {
                return Err(DiagnosticsError::Infeasible(format!(
                    "sample bound is negative (L1 h2^2 = {:e} <= 2 rho)",
                    l1 * p.h2 * p.h2
                )));
            }
            Some(ceil_count(t)?.max(1))
        }
    };
    Ok(HyperparamPlan {
        mu_max: mu_a.min(mu_b),
        n_min,
        t_min,
        h_window: (low, h1_max / 2.0),
        h1_max,
        smoothed_l1: None,
        source: if p.sigma.is_some() {
            PlanSource::UnconstrainedVr
        } else {
            PlanSource::Unconstrained
        },
        warnings,
    })
}

/// Inputs for the constrained plan with `h1 = h2 = h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedInput {
    pub l1: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub h: f64,
    /// Diameter of the feasible set.
    pub d_z: f64,
    pub d: usize,
    pub sigma: Option<f64>,
}

/// Guarantee on `E |tau(z_k)|^2` for projected ZO-EG.
pub fn plan_constrained(p: &ConstrainedInput) -> Result<HyperparamPlan, DiagnosticsError> {
    positive("L1", p.l1)?;
    nonnegative("rho", p.rho)?;
    positive("lambda", p.lambda)?;
    positive("r0", p.r0)?;
    positive("epsilon", p.epsilon)?;
    positive("h", p.h)?;
    positive("D_z", p.d_z)?;
    if let Some(s) = p.sigma {
        nonnegative("sigma", s)?;
    }
    let (l1, rho, lam, eps) = (p.l1, p.rho, p.lambda, p.epsilon);
    let d = p.d as f64;
    let mut warnings = Vec::new();
    rho_range(rho, 1.0 / (24.0 * l1), &mut warnings);
    let high = 1.0 / (2.0 * l1 * lam);
    let low = (6.0 * rho / (l1 * lam * lam)).sqrt();
    check_window(low, high, p.h, "h", &mut warnings)?;
    let den = lam * lam * l1 * p.h * p.h - 6.0 * rho;
    let a = 4.0 * rho * lam * l1 * l1 * (d + 3.0).powi(3) / den;
    let b = 4.0 * lam * l1 * p.d_z * (d + 3.0).powf(1.5) / den;
    // (-b + sqrt(b^2 + a eps^2)) / (2a), rationalised so that a -> 0 is exact.
    let mu_root = eps * eps / (2.0 * (b + (b * b + a * eps * eps).sqrt()));
    let mu_cap = eps / (2f64.sqrt() * lam * l1 * (d + 3.0).powf(1.5));
    let n_coef = if p.sigma.is_some() { 32.0 } else { 16.0 };
    let n_min = iterations(n_coef * lam * lam * l1 * p.r0 * p.r0 / den / (eps * eps) - 1.0)?;
    let t_min = match p.sigma {
        None => None,
        Some(s) => {
            let c = (36.0 * rho + 4.0 / l1 + 4.0) * lam * s * s / den;
            let dd = 2.0 * p.d_z * lam * s / den;
            let inner = ceil_count((c / (eps * eps)).max(dd * dd / eps.powi(4)))?;
            Some(inner.checked_mul(32).ok_or_else(|| DiagnosticsError::Infeasible("sample count overflows".into()))?.max(1))
        }
    };
    Ok(HyperparamPlan {
        mu_max: mu_root.min(mu_cap),
        n_min,
        t_min,
        h_window: (low, high),
        h1_max: high,
        smoothed_l1: None,
        source: if p.sigma.is_some() {
            PlanSource::ConstrainedVr
        } else {
            PlanSource::Constrained
        },
        warnings,
    })
}

/// Inputs for the nonsmooth (Goldstein) plan; `B = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonsmoothInput {
    pub l0: f64,
    pub rho: f64,
    pub d: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub r0: f64,
    pub sigma: Option<f64>,
}

/// Chains the Goldstein `mu` rule into `L1(f_mu) = sqrt(d) L0 / mu`, takes
/// the largest admissible steps `h1 = 1/L1(f_mu)`, `h2 = h1/2`, and sizes
/// `N` and `t` from them.
pub fn plan_nonsmooth(p: &NonsmoothInput) -> Result<HyperparamPlan, DiagnosticsError> {
    positive("L0", p.l0)?;
    nonnegative("rho", p.rho)?;
    positive("epsilon", p.epsilon)?;
    positive("r0", p.r0)?;
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(DiagnosticsError::InvalidInput(format!("delta must lie in (0, 1), got {}", p.delta)));
    }
    if p.d == 0 {
        return Err(DiagnosticsError::InvalidInput("dimension must be positive".into()));
    }
    if let Some(s) = p.sigma {
        nonnegative("sigma", s)?;
    }
    let eps = p.epsilon;
    let mu = goldstein_mu(p.delta, eps, p.l0, p.d);
    let l1mu = (p.d as f64).sqrt() * p.l0 / mu;
    let mut warnings = Vec::new();
    rho_range(p.rho, 1.0 / (4.0 * l1mu), &mut warnings);
    let h1 = 1.0 / l1mu;
    let h2 = h1 / 2.0;
    let low = (p.rho / l1mu).sqrt();
    check_window(low, h2, h2, "h2", &mut warnings)?;
    let den = l1mu * h2 * h2 - p.rho;
    let n_coef = if p.sigma.is_some() { 16.0 } else { 8.0 };
    let n_min = iterations(n_coef * p.r0 * p.r0 * l1mu / den / (eps * eps) - 1.0)?;
    let t_min = match p.sigma {
        None => None,
        Some(s) => Some(ceil_count(24.0 * s * s / (l1mu * den) / (eps * eps))?.max(1)),
    };
    Ok(HyperparamPlan {
        mu_max: mu,
        n_min,
        t_min,
        h_window: (low, h2),
        h1_max: h1,
        smoothed_l1: Some(l1mu),
        source: if p.sigma.is_some() {
            PlanSource::NonsmoothVr
        } else {
            PlanSource::Nonsmooth
        },
        warnings,
    })
}

/// Inputs for the iteration-dependent schedule `mu_k = l / (k + 1)`, `B = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicInput {
    pub l1: f64,
    pub rho: f64,
    pub r0: f64,
    pub epsilon: f64,
    pub h2: f64,
    pub d: usize,
    pub scale: f64,
}

/// Iteration count for the harmonic schedule; `mu_max` reports `mu_0 = l`.
pub fn plan_harmonic(p: &HarmonicInput) -> Result<HyperparamPlan, DiagnosticsError> {
    positive("L1", p.l1)?;
    nonnegative("rho", p.rho)?;
    positive("r0", p.r0)?;
    positive("epsilon", p.epsilon)?;
    positive("h2", p.h2)?;
    positive("l", p.scale)?;
    let (l1, rho, eps) = (p.l1, p.rho, p.epsilon);
    let d = p.d as f64;
    let mut warnings = Vec::new();
    rho_range(rho, 1.0 / (8.0 * l1), &mut warnings);
    let h1_max = 1.0 / l1;
    let low = (2.0 * rho / l1).sqrt();
    check_window(low, h1_max / 2.0, p.h2, "h2", &mut warnings)?;
    let den = l1 * p.h2 * p.h2 - 2.0 * rho;
    let smoothing = (l1 * d + l1 * l1 * rho * (d + 3.0).powi(3)) / den * p.scale * p.scale * PI * PI / 6.0;
    let n_min = iterations((2.0 * l1 * p.r0 * p.r0 / den + smoothing) / (eps * eps) - 1.0)?;
    Ok(HyperparamPlan {
        mu_max: p.scale,
        n_min,
        t_min: None,
        h_window: (low, h1_max / 2.0),
        h1_max,
        smoothed_l1: None,
        source: PlanSource::HarmonicMu,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> UnconstrainedInput {
        UnconstrainedInput {
            l1: 1.0,
            rho: 0.0,
            lambda: 1.0,
            r0: 1.0,
            epsilon: 0.1,
            h2: 0.5,
            d: 2,
            sigma: None,
        }
    }

    #[test]
    fn unconstrained_hand_value() {
        let plan = plan_unconstrained(&base()).unwrap();
        assert_eq!(plan.n_min, 3199);
        assert_eq!(plan.t_min, None);
        assert_eq!(plan.h_window, (0.0, 0.5));
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn zero_sigma_needs_one_sample() {
        let plan = plan_unconstrained(&UnconstrainedInput { sigma: Some(0.0), ..base() }).unwrap();
        assert_eq!(plan.t_min, Some(1));
    }

    #[test]
    fn denominator_blows_up_near_rho_limit() {
        // lambda^2 L1 h2^2 / 2 = 0.125; the window lower end reaches h2 there.
        let mut last = 0;
        for rho in [0.1, 0.12, 0.124, 0.1249] {
            let plan = plan_unconstrained(&UnconstrainedInput { rho, ..base() }).unwrap();
            assert!(plan.n_min > last);
            last = plan.n_min;
        }
        assert!(last > 1_000_000);
        let err = plan_unconstrained(&UnconstrainedInput { rho: 0.125, ..base() });
        assert!(matches!(err, Err(DiagnosticsError::Infeasible(_))));
    }

    #[test]
    fn constrained_rho_zero_limit() {
        let plan = plan_constrained(&ConstrainedInput {
            l1: 1.0,
            rho: 0.0,
            lambda: 1.0,
            r0: 1.0,
            epsilon: 0.1,
            h: 0.25,
            d_z: 1.0,
            d: 2,
            sigma: Some(0.0),
        })
        .unwrap();
        let b = 4.0 * 5f64.powf(1.5) * 16.0;
        assert!((plan.mu_max - 0.01 / (4.0 * b)).abs() <= 1e-12 * plan.mu_max);
        assert_eq!(plan.t_min, Some(1));
    }

    #[test]
    fn nonsmooth_chain() {
        let plan = plan_nonsmooth(&NonsmoothInput {
            l0: 1.0,
            rho: 0.0,
            d: 2,
            delta: 0.5,
            epsilon: 0.1,
            r0: 1.0,
            sigma: None,
        })
        .unwrap();
        let l1mu = plan.smoothed_l1.unwrap();
        assert!((l1mu - 104.550_752_292_951_81).abs() < 1e-9, "{l1mu}");
        assert_eq!(plan.h_window.0, 0.0);
        assert!((plan.h_window.1 - 0.5 / l1mu).abs() < 1e-18);
    }

    #[test]
    fn harmonic_reduces_to_constant_bound_without_smoothing_term() {
        let plan = plan_harmonic(&HarmonicInput {
            l1: 1.0,
            rho: 0.0,
            r0: 1.0,
            epsilon: 0.1,
            h2: 0.5,
            d: 2,
            scale: 1e-9,
        })
        .unwrap();
        // 2 / 0.25 * 100 - 1, plus a negligible smoothing contribution.
        assert_eq!(plan.n_min, 799);
    }
}
