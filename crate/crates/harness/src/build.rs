//! Turns config sections into core objects.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use zomax_core::exec::{Execution, Streams};
use zomax_core::geometry::{JointPoint, MetricMatrix};
use zomax_core::oracles::{MuSchedule, NoiseModel, OracleConfig, SampleSchedule, SmoothingScheme};
use zomax_core::problems::{
    abs_diff_problem, bilinear_problem, toy_f1, toy_f2, toy_f3, LaneMerging, LaneMergingParams, MinMaxProblem,
    PoisoningData, PoisoningParams, RlsInstance,
};
use zomax_core::solvers::{DiagnosticMode, ProjectionPolicy, SolverConfig, Variant};

use crate::config::{
    DiagMode, DiagnosticsSpec, ExperimentConfig, MetricSpec, OracleSpec, ProblemKind, Projection, Samples,
    Scheme, SolverSpec, VariantName,
};

/// A constructed problem plus the data some reports need.
pub struct BuiltProblem {
    pub problem: MinMaxProblem,
    pub start: JointPoint,
    pub poisoning: Option<Arc<PoisoningData>>,
    pub lane: Option<Arc<LaneMerging>>,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let mut poisoning = None;
    let mut lane = None;
    let problem = match &cfg.problem.kind {
        ProblemKind::ToyF1 => toy_f1(),
        ProblemKind::ToyF2 => toy_f2(),
        ProblemKind::ToyF3 => toy_f3(),
        ProblemKind::Bilinear { k, orthant } => {
            if *k == 0 {
                bail!("problem: bilinear `k` must be at least 1");
            }
            bilinear_problem(*k, *orthant)
        }
        ProblemKind::AbsDiff => abs_diff_problem(),
        ProblemKind::Rls {
            rows,
            cols,
            rho,
            data_seed,
            data,
        } => {
            let inst = match data {
                Some(path) => {
                    let path = cfg.resolve(path);
                    RlsInstance::load_csv(&path, *rho).with_context(|| format!("loading {}", path.display()))?
                }
                None => RlsInstance::random(*rows, *cols, *rho, *data_seed),
            };
            inst.problem()?
        }
        ProblemKind::Poisoning {
            data_seed,
            data,
            zeta,
            samples,
            features,
            corruption,
            lambda,
        } => {
            let d = PoisoningParams::default();
            let params = PoisoningParams {
                samples: samples.unwrap_or(d.samples),
                features: features.unwrap_or(d.features),
                corruption: corruption.unwrap_or(d.corruption),
                lambda: lambda.unwrap_or(d.lambda),
                zeta: zeta.unwrap_or(d.zeta),
                ..d
            };
            let set = match data {
                Some(path) => {
                    let path = cfg.resolve(path);
                    PoisoningData::load_csv(&path, params).with_context(|| format!("loading {}", path.display()))?
                }
                None => PoisoningData::generate(params, *data_seed),
            };
            let set = Arc::new(set);
            let p = set.problem()?;
            poisoning = Some(set);
            p
        }
        ProblemKind::LaneMerging { control_points, dt } => {
            let d = LaneMergingParams::default();
            let params = LaneMergingParams {
                control_points: control_points.unwrap_or(d.control_points),
                dt: dt.unwrap_or(d.dt),
                ..d
            };
            let lm = Arc::new(LaneMerging::new(params)?);
            let p = lm.problem();
            lane = Some(lm);
            p
        }
    };
    let (n, m) = problem.dims();
    let start = match &cfg.problem.start {
        Some(v) => point(v, n, m).context("problem.start")?,
        None => JointPoint::zeros(n, m),
    };
    Ok(BuiltProblem {
        problem,
        start,
        poisoning,
        lane,
    })
}

/// Splits a flat `x`-then-`y` vector.
pub fn point(v: &[f64], n: usize, m: usize) -> Result<JointPoint> {
    if v.len() != n + m {
        bail!("expected {} coordinates ({n} + {m}), got {}", n + m, v.len());
    }
    Ok(JointPoint::from_flat(v, n))
}

pub fn build_metric(spec: &MetricSpec, n: usize, m: usize) -> Result<MetricMatrix> {
    let metric = match spec {
        MetricSpec::Identity => MetricMatrix::identity(n, m),
        MetricSpec::Scaled { lambda } => MetricMatrix::scaled_identity(n, m, *lambda)?,
        MetricSpec::Blocks { x, y } => MetricMatrix::scaled_blocks(n, m, *x, *y)?,
        MetricSpec::Diagonal { x, y } => {
            if x.len() != n || y.len() != m {
                bail!("metric: diagonal needs {n} x-entries and {m} y-entries");
            }
            MetricMatrix::diagonal(x, y)?
        }
        MetricSpec::RandomDiagonal { seed, kappa, min } => {
            if !(*kappa >= 1.0) || !(*min > 0.0) {
                bail!("metric: random_diagonal needs kappa >= 1 and min > 0");
            }
            let diag = random_diagonal(n + m, *kappa, *min, *seed);
            MetricMatrix::diagonal(&diag[..n], &diag[n..])?
        }
        MetricSpec::Half { high, low, seed } => {
            let d = n + m;
            let mut diag: Vec<f64> = (0..d).map(|i| if i < d / 2 { *high } else { *low }).collect();
            if let Some(seed) = seed {
                diag.shuffle(&mut Streams::new(*seed).rng(0));
            }
            MetricMatrix::diagonal(&diag[..n], &diag[n..])?
        }
    };
    Ok(metric)
}

/// Uniform entries mapped affinely onto `[min, min * kappa]`, so the
/// condition number is exactly `kappa`.
pub fn random_diagonal(d: usize, kappa: f64, min: f64, seed: u64) -> Vec<f64> {
    let mut rng = Streams::new(seed).rng(0);
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    if d < 2 {
        return vec![min; d];
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = min * kappa;
    raw.iter()
        .map(|r| {
            let s = if hi > lo { (r - lo) / (hi - lo) } else { 0.0 };
            if s == 1.0 {
                top
            } else {
                min + s * (top - min)
            }
        })
        .collect()
}

pub fn build_oracle(spec: &OracleSpec, n: usize, m: usize) -> Result<OracleConfig> {
    let metric = build_metric(&spec.metric, n, m)?;
    let mu = match (spec.mu, spec.mu_scale) {
        (Some(mu), None) => MuSchedule::Constant(mu),
        (None, Some(scale)) => MuSchedule::Harmonic { scale },
        _ => bail!("oracle: give exactly one of `mu` and `mu_scale`"),
    };
    let samples = match &spec.samples {
        Samples::Count(0) => bail!("oracle: `samples` must be at least 1"),
        Samples::Count(t) => SampleSchedule::Constant(*t),
        Samples::Named(s) if s == "linear" => SampleSchedule::Linear,
        Samples::Named(s) => bail!("oracle: unknown sample schedule `{s}` (use a count or \"linear\")"),
    };
    let scheme = match spec.scheme {
        Scheme::Forward => SmoothingScheme::Forward,
        Scheme::Backward => SmoothingScheme::Backward,
        Scheme::Central => SmoothingScheme::Central,
    };
    let mut oracle = OracleConfig::new(metric, 1.0)
        .with_mu(mu)
        .with_samples(samples)
        .with_scheme(scheme)
        .with_execution(if spec.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        });
    if spec.noise_variance != 0.0 {
        oracle = oracle.with_noise(NoiseModel::AdditiveGaussian {
            variance: spec.noise_variance,
        });
    }
    if let Some(c) = spec.cache {
        oracle = oracle.with_cache(c);
    }
    oracle.validate()?;
    Ok(oracle)
}

pub fn variant(v: VariantName) -> Variant {
    match v {
        VariantName::Zoeg => Variant::Zoeg,
        VariantName::VrZoeg => Variant::VrZoeg,
        VariantName::ModifiedVrZoeg => Variant::ModifiedVrZoeg,
        VariantName::FirstOrderEg => Variant::FirstOrderEg,
        VariantName::Gda => Variant::Gda,
    }
}

pub fn diagnostic_mode(spec: &DiagnosticsSpec, problem: &MinMaxProblem) -> Result<DiagnosticMode> {
    let (n, m) = problem.dims();
    Ok(match spec.mode {
        DiagMode::Auto => DiagnosticMode::Auto,
        DiagMode::Operator => DiagnosticMode::OperatorNorm,
        DiagMode::Mapping => DiagnosticMode::MappingNorm,
        DiagMode::MonteCarlo => DiagnosticMode::MonteCarlo {
            samples: spec.samples.unwrap_or(16),
        },
        DiagMode::Off => DiagnosticMode::Off,
        DiagMode::Distance => {
            let target = match &spec.target {
                Some(t) => point(t, n, m).context("diagnostics.target")?,
                None => problem
                    .metadata
                    .z_star
                    .clone()
                    .context("diagnostics: `distance` needs a target and the problem has no known solution")?,
            };
            DiagnosticMode::DistanceTo(target)
        }
    })
}

/// Solver config for one seed.
pub fn build_solver(
    cfg: &ExperimentConfig,
    solver: &SolverSpec,
    oracle: &OracleSpec,
    problem: &MinMaxProblem,
    seed: u64,
) -> Result<SolverConfig> {
    let (n, m) = problem.dims();
    let (h1, h2) = solver.steps()?;
    let oracle = build_oracle(oracle, n, m)?;
    Ok(SolverConfig::new(variant(solver.variant), h1, h2, solver.iterations, oracle)
        .with_seed(seed)
        .with_record_every(cfg.record_every)
        .with_diagnostic(diagnostic_mode(&cfg.diagnostics, problem)?)
        .with_projection(match solver.projection {
            Projection::Metric => ProjectionPolicy::Metric,
            Projection::Euclidean => ProjectionPolicy::Euclidean,
        })
        .with_project_start(cfg.problem.project_start))
}
