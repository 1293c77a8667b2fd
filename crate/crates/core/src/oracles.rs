//! Gaussian-smoothing zeroth-order oracles for min-max problems.
//!
//! Every estimate is returned in operator form: the x-block approximates
//! `grad_x f_mu` and the y-block approximates `-grad_y f_mu`.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::exec::{Execution, Moments, StreamRng, Streams};
use crate::geometry::{BlockVector, DualVector, GeometryError, JointPoint, MetricMatrix};

/// A scalar objective `f(x, y)`.
pub trait Objective: Sync {
    fn value(&self, z: &JointPoint) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&JointPoint) -> f64 + Sync,
{
    fn value(&self, z: &JointPoint) -> f64 {
        self(z)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("objective returned {value} at {point:?}")]
    EvaluationFailed { point: JointPoint, value: f64 },
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothingScheme {
    #[default]
    Forward,
    Backward,
    Central,
}

/// Output noise added independently to every scalar evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    Noiseless,
    AdditiveGaussian { variance: f64 },
}

impl NoiseModel {
    pub fn is_noisy(&self) -> bool {
        matches!(self, NoiseModel::AdditiveGaussian { variance } if *variance > 0.0)
    }

    fn std_dev(&self) -> f64 {
        match self {
            NoiseModel::Noiseless => 0.0,
            NoiseModel::AdditiveGaussian { variance } => variance.sqrt(),
        }
    }
}

/// Smoothing radius per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSchedule {
    Constant(f64),
    /// `mu_k = scale / (k + 1)`.
    Harmonic { scale: f64 },
}

impl MuSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            MuSchedule::Constant(mu) => *mu,
            MuSchedule::Harmonic { scale } => scale / (k as f64 + 1.0),
        }
    }
}

/// Directions averaged per oracle call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSchedule {
    Constant(usize),
    /// `t_k = k + 1`.
    Linear,
}

impl SampleSchedule {
    pub fn at(&self, k: usize) -> usize {
        match self {
            SampleSchedule::Constant(t) => *t,
            SampleSchedule::Linear => k + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub mu: MuSchedule,
    pub scheme: SmoothingScheme,
    pub samples: SampleSchedule,
    pub noise: NoiseModel,
    pub metric: MetricMatrix,
    /// Reuse one evaluation of `f(z)` across the directions of a call.
    /// `None` picks the default: on when noiseless, off under noise.
    pub cache_base: Option<bool>,
    pub execution: Execution,
}

impl OracleConfig {
    /// Forward scheme, one sample, noiseless.
    pub fn new(metric: MetricMatrix, mu: f64) -> Self {
        Self {
            mu: MuSchedule::Constant(mu),
            scheme: SmoothingScheme::Forward,
            samples: SampleSchedule::Constant(1),
            noise: NoiseModel::Noiseless,
            metric,
            cache_base: None,
            execution: Execution::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: SmoothingScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_samples(mut self, samples: SampleSchedule) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_mu(mut self, mu: MuSchedule) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_cache(mut self, cache: bool) -> Self {
        self.cache_base = Some(cache);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let mu_ok = match self.mu {
            MuSchedule::Constant(mu) => mu > 0.0 && mu.is_finite(),
            MuSchedule::Harmonic { scale } => scale > 0.0 && scale.is_finite(),
        };
        if !mu_ok {
            return Err(OracleError::InvalidConfig(format!(
                "smoothing radius must be positive and finite, got {:?}",
                self.mu
            )));
        }
        if self.samples == SampleSchedule::Constant(0) {
            return Err(OracleError::InvalidConfig(
                "samples per call must be at least 1".into(),
            ));
        }
        if let NoiseModel::AdditiveGaussian { variance } = self.noise {
            if !(variance >= 0.0 && variance.is_finite()) {
                return Err(OracleError::InvalidConfig(format!(
                    "noise variance must be nonnegative, got {variance}"
                )));
            }
        }
        Ok(())
    }

    pub fn mu_at(&self, k: usize) -> f64 {
        self.mu.at(k)
    }

    pub fn samples_at(&self, k: usize) -> usize {
        self.samples.at(k)
    }

    pub fn caches_base(&self) -> bool {
        self.scheme != SmoothingScheme::Central
            && self.cache_base.unwrap_or(!self.noise.is_noisy())
    }

    /// Function evaluations spent by one call averaging `t` directions.
    pub fn evals_per_call(&self, t: usize) -> u64 {
        let t = t as u64;
        if self.caches_base() {
            t + 1
        } else {
            2 * t
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub value: DualVector,
    pub samples_used: usize,
    pub function_evals: u64,
}

/// Stream leaf reserved for the noise on a cached `f(z)`.
const BASE_LEAF: u64 = u64::MAX;

fn evaluate<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    point: &JointPoint,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<f64, OracleError> {
    let value = f.value(point);
    if !value.is_finite() {
        return Err(OracleError::EvaluationFailed {
            point: point.clone(),
            value,
        });
    }
    if noise.is_noisy() {
        let eps: f64 = rng.sample(StandardNormal);
        Ok(value + noise.std_dev() * eps)
    } else {
        Ok(value)
    }
}

/// `[q B1 u1; -q B2 u2]`.
fn block_estimate(q: f64, u: &JointPoint, metric: &MetricMatrix) -> DualVector {
    let bu = metric.apply(u);
    BlockVector::new(&bu.x * q, &bu.y * (-q))
}

/// Difference quotient along `u`; `base` is a precomputed `f(z)` if cached.
/// Returns the quotient and the evaluations spent.
#[allow(clippy::too_many_arguments)]
fn quotient<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    z: &JointPoint,
    u: &JointPoint,
    mu: f64,
    scheme: SmoothingScheme,
    base: Option<f64>,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<(f64, u64), OracleError> {
    let mut evals = 0;
    let base_value = |rng: &mut R, evals: &mut u64| match base {
        Some(v) => Ok(v),
        None => {
            *evals += 1;
            evaluate(f, z, noise, rng)
        }
    };
    let q = match scheme {
        SmoothingScheme::Forward => {
            let plus = evaluate(f, &z.axpy(mu, u), noise, rng)?;
            evals += 1;
            let fz = base_value(rng, &mut evals)?;
            (plus - fz) / mu
        }
        SmoothingScheme::Backward => {
            let minus = evaluate(f, &z.axpy(-mu, u), noise, rng)?;
            evals += 1;
            let fz = base_value(rng, &mut evals)?;
            (fz - minus) / mu
        }
        SmoothingScheme::Central => {
            let plus = evaluate(f, &z.axpy(mu, u), noise, rng)?;
            let minus = evaluate(f, &z.axpy(-mu, u), noise, rng)?;
            evals += 2;
            (plus - minus) / (2.0 * mu)
        }
    };
    Ok((q, evals))
}

fn single_direction<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    z: &JointPoint,
    u: &JointPoint,
    mu: f64,
    scheme: SmoothingScheme,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<GradientEstimate, OracleError> {
    let (q, evals) = quotient(f, z, u, mu, scheme, None, cfg.noise, rng)?;
    Ok(GradientEstimate {
        value: block_estimate(q, u, &cfg.metric),
        samples_used: 1,
        function_evals: evals,
    })
}

/// Forward estimate `(f(z + mu u) - f(z)) / mu * B u` in block form.
///
/// `rng` only feeds the output noise; `u` is supplied by the caller.
pub fn forward_oracle<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    z: &JointPoint,
    u: &JointPoint,
    mu: f64,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<GradientEstimate, OracleError> {
    single_direction(f, z, u, mu, SmoothingScheme::Forward, cfg, rng)
}

/// Backward estimate `(f(z) - f(z - mu u)) / mu * B u` in block form.
pub fn backward_oracle<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    z: &JointPoint,
    u: &JointPoint,
    mu: f64,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<GradientEstimate, OracleError> {
    single_direction(f, z, u, mu, SmoothingScheme::Backward, cfg, rng)
}

/// Central estimate `(f(z + mu u) - f(z - mu u)) / (2 mu) * B u` in block form.
pub fn central_oracle<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &O,
    z: &JointPoint,
    u: &JointPoint,
    mu: f64,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<GradientEstimate, OracleError> {
    single_direction(f, z, u, mu, SmoothingScheme::Central, cfg, rng)
}

fn cached_base<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    cfg: &OracleConfig,
    streams: &Streams,
) -> Result<Option<f64>, OracleError> {
    if cfg.caches_base() {
        let mut rng = streams.rng(BASE_LEAF);
        Ok(Some(evaluate(f, z, cfg.noise, &mut rng)?))
    } else {
        Ok(None)
    }
}

/// Draw `u` from leaf `index` of `streams` and form one block estimate.
fn leaf_estimate<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    cfg: &OracleConfig,
    mu: f64,
    base: Option<f64>,
    streams: &Streams,
    index: u64,
) -> Result<(DualVector, u64), OracleError> {
    let mut rng: StreamRng = streams.rng(index);
    let u = cfg.metric.sample(&mut rng);
    let (q, evals) = quotient(f, z, &u, mu, cfg.scheme, base, cfg.noise, &mut rng)?;
    Ok((block_estimate(q, &u, &cfg.metric), evals))
}

/// One-direction oracle call at iteration `k`, drawing from leaf 0 of `streams`.
pub fn sampled_oracle<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    cfg: &OracleConfig,
    k: usize,
    streams: &Streams,
) -> Result<GradientEstimate, OracleError> {
    let mu = cfg.mu_at(k);
    let base = cached_base(f, z, cfg, streams)?;
    let (value, evals) = leaf_estimate(f, z, cfg, mu, base, streams, 0)?;
    Ok(GradientEstimate {
        value,
        samples_used: 1,
        function_evals: evals + u64::from(base.is_some()),
    })
}

/// Mean of `t_k` independent block estimates; direction `i` uses leaf `i`.
///
/// Directions may be evaluated in parallel; the sum is always accumulated in
/// index order.
pub fn averaged_oracle<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    cfg: &OracleConfig,
    k: usize,
    streams: &Streams,
) -> Result<GradientEstimate, OracleError> {
    let t = cfg.samples_at(k);
    if t == 0 {
        return Err(OracleError::InvalidConfig(format!("t_{k} = 0")));
    }
    let mu = cfg.mu_at(k);
    let base = cached_base(f, z, cfg, streams)?;
    let parts = cfg.execution.try_map(t, |i| {
        leaf_estimate(f, z, cfg, mu, base, streams, i as u64)
    })?;
    let mut iter = parts.into_iter();
    let (mut sum, mut evals) = iter.next().expect("t >= 1");
    for (g, e) in iter {
        sum = &sum + &g;
        evals += e;
    }
    Ok(GradientEstimate {
        value: sum.map(|v| v / t as f64),
        samples_used: t,
        function_evals: evals + u64::from(base.is_some()),
    })
}

/// Monte-Carlo mean and standard error of a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo mean and per-coordinate standard error of a dual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEstimate {
    pub mean: DualVector,
    pub std_error: DualVector,
}

impl VectorEstimate {
    /// Euclidean norm of the standard-error vector.
    pub fn error_norm(&self) -> f64 {
        self.std_error.norm()
    }
}

const MC_CHUNK: usize = 4096;

fn monte_carlo<F>(dim: usize, count: usize, exec: Execution, sample: F) -> Result<Moments, OracleError>
where
    F: Fn(usize) -> Result<Vec<f64>, OracleError> + Sync + Send,
{
    let chunks = exec.map_chunks(count, MC_CHUNK, |start, end| {
        let mut acc = Moments::new(dim);
        for i in start..end {
            acc.push(sample(i)?);
        }
        Ok::<_, OracleError>(acc)
    });
    let mut total = Moments::new(dim);
    for c in chunks {
        total.merge(&c?);
    }
    Ok(total)
}

fn check_count(m: usize, min: usize) -> Result<(), OracleError> {
    if m < min {
        return Err(OracleError::InvalidConfig(format!(
            "need at least {min} Monte-Carlo samples, got {m}"
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of `f_mu(z) = E f(z + mu u)`, `u ~ N(0, B^{-1})`.
pub fn estimate_f_mu<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    mu: f64,
    m: usize,
    metric: &MetricMatrix,
    streams: &Streams,
    exec: Execution,
) -> Result<ScalarEstimate, OracleError> {
    check_count(m, 2)?;
    let mom = monte_carlo(1, m, exec, |i| {
        let mut rng = streams.rng(i as u64);
        let u = metric.sample(&mut rng);
        let v = evaluate(f, &z.axpy(mu, &u), NoiseModel::Noiseless, &mut rng)?;
        Ok(vec![v])
    })?;
    Ok(ScalarEstimate {
        mean: mom.mean[0],
        std_error: mom.std_error()[0],
    })
}

/// Monte-Carlo estimate of `F_mu(z) = E G_mu(z)` using noiseless forward
/// differences.
pub fn estimate_operator_mu<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    mu: f64,
    m: usize,
    metric: &MetricMatrix,
    streams: &Streams,
    exec: Execution,
) -> Result<VectorEstimate, OracleError> {
    check_count(m, 2)?;
    let fz = evaluate(f, z, NoiseModel::Noiseless, &mut streams.rng(BASE_LEAF))?;
    let n = z.n();
    let mom = monte_carlo(z.dim(), m, exec, |i| {
        let mut rng = streams.rng(i as u64);
        let u = metric.sample(&mut rng);
        let (q, _) = quotient(
            f,
            z,
            &u,
            mu,
            SmoothingScheme::Forward,
            Some(fz),
            NoiseModel::Noiseless,
            &mut rng,
        )?;
        Ok(block_estimate(q, &u, metric).to_vec())
    })?;
    Ok(VectorEstimate {
        mean: BlockVector::from_flat(&mom.mean, n),
        std_error: BlockVector::from_flat(&mom.std_error(), n),
    })
}

/// Empirical oracle variance at `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    /// `1/(M-1) sum_j ||G^j - mean||_*^2`.
    pub variance: f64,
    pub mean: DualVector,
    pub repetitions: usize,
}

/// Estimates `E ||G_mu(z) - F_mu(z)||_*^2` for the averaged oracle of `cfg`
/// at iteration `k` from `m` independent calls; call `j` uses `streams.fork(j)`.
pub fn estimate_oracle_variance<O: Objective + ?Sized>(
    f: &O,
    z: &JointPoint,
    cfg: &OracleConfig,
    m: usize,
    k: usize,
    streams: &Streams,
) -> Result<VarianceEstimate, OracleError> {
    check_count(m, 10)?;
    let inner = cfg.clone().with_execution(Execution::Sequential);
    let draws = cfg.execution.try_map(m, |j| {
        averaged_oracle(f, z, &inner, k, &streams.fork(j as u64)).map(|g| g.value)
    })?;
    let mut mean = draws[0].clone();
    for g in &draws[1..] {
        mean = &mean + g;
    }
    let mean = mean.map(|v| v / m as f64);
    let mut total = 0.0;
    for g in &draws {
        let dev = g - &mean;
        total += cfg.metric.dual_norm(&dev)?.powi(2);
    }
    Ok(VarianceEstimate {
        variance: total / (m as f64 - 1.0),
        mean,
        repetitions: m,
    })
}
