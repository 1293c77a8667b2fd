//! Data-poisoning attack on logistic regression.
//!
//! `f(x, y) = -(h(x, y; D_p) + h(0, y; D_t) + lambda |y|^2)` where `x` is an
//! additive perturbation shared by the poisoned samples `D_p`, `y` the model
//! weights and `h` the mean binary cross-entropy of `sigmoid((x + a)^T y)`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{DualVector, JointPoint};

use super::{sigmoid, softplus, FeasibleSet, MinMaxProblem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoisoningParams {
    pub samples: usize,
    pub features: usize,
    /// Fraction of samples that receive the perturbation.
    pub corruption: f64,
    pub lambda: f64,
    /// Bound on `|x|_inf`.
    pub zeta: f64,
    /// Variance of the label noise `v_i`.
    pub label_noise_variance: f64,
}

impl Default for PoisoningParams {
    fn default() -> Self {
        Self {
            samples: 500,
            features: 20,
            corruption: 0.15,
            lambda: 1e-3,
            zeta: 10.0,
            label_noise_variance: 1e-3,
        }
    }
}

/// Dataset with the poisoned rows stored first.
#[derive(Debug, Clone, PartialEq)]
pub struct PoisoningData {
    /// `samples x features`.
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub poisoned: usize,
    pub params: PoisoningParams,
}

impl PoisoningData {
    /// Draws `theta ~ N(0, I)`, then per sample `a_i ~ N(0, I)` and
    /// `v_i ~ N(0, var)`; the label is 1 iff `sigmoid(a_i^T theta + v_i) >= 1/2`.
    pub fn generate(params: PoisoningParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params.features;
        let theta = DVector::<f64>::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let sd = params.label_noise_variance.sqrt();
        let mut features = DMatrix::zeros(params.samples, p);
        let mut labels = DVector::zeros(params.samples);
        for i in 0..params.samples {
            for j in 0..p {
                features[(i, j)] = StandardNormal.sample(&mut rng);
            }
            let v: f64 = StandardNormal.sample(&mut rng);
            let score = features.row(i).transpose().dot(&theta) + sd * v;
            labels[i] = if sigmoid(score) >= 0.5 { 1.0 } else { 0.0 };
        }
        let poisoned = poisoned_count(params.samples, params.corruption);
        Self {
            features,
            labels,
            poisoned,
            params,
        }
    }

    pub fn samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Mean cross-entropy over rows `range` with perturbation `x`, plus the
    /// gradient factors `sigmoid(s_i) - b_i`.
    fn loss(&self, range: std::ops::Range<usize>, x: Option<&DVector<f64>>, y: &DVector<f64>) -> (f64, Vec<f64>) {
        let count = range.len().max(1) as f64;
        let shift = x.map_or(0.0, |x| x.dot(y));
        let mut total = 0.0;
        let mut resid = Vec::with_capacity(range.len());
        for i in range {
            let s = self.features.row(i).transpose().dot(y) + shift;
            let b = self.labels[i];
            total += softplus(s) - b * s;
            resid.push(sigmoid(s) - b);
        }
        (total / count, resid)
    }

    /// Objective `f(x, y)`.
    pub fn objective(&self, z: &JointPoint) -> f64 {
        let (hp, _) = self.loss(0..self.poisoned, Some(&z.x), &z.y);
        let (ht, _) = self.loss(self.poisoned..self.samples(), None, &z.y);
        -(hp + ht + self.params.lambda * z.y.norm_squared())
    }

    /// Operator `F(z) = (grad_x f, -grad_y f)`.
    pub fn operator(&self, z: &JointPoint) -> DualVector {
        let np = self.poisoned.max(1) as f64;
        let nt = (self.samples() - self.poisoned).max(1) as f64;
        let (_, rp) = self.loss(0..self.poisoned, Some(&z.x), &z.y);
        let (_, rt) = self.loss(self.poisoned..self.samples(), None, &z.y);
        let sum_p: f64 = rp.iter().sum();
        let mut gy_h = DVector::zeros(self.dim());
        for (k, r) in rp.iter().enumerate() {
            gy_h += (self.features.row(k).transpose() + &z.x) * (r / np);
        }
        for (k, r) in rt.iter().enumerate() {
            gy_h += self.features.row(self.poisoned + k).transpose() * (r / nt);
        }
        let grad_x = -(&z.y * (sum_p / np));
        let grad_y = -(gy_h + &z.y * (2.0 * self.params.lambda));
        DualVector::new(grad_x, -grad_y)
    }

    /// Fraction of rows whose label matches `sigmoid(a^T y) >= 1/2`, using
    /// the unperturbed features.
    pub fn accuracy(&self, y: &DVector<f64>) -> f64 {
        let scores = &self.features * y;
        let hits = scores
            .iter()
            .zip(self.labels.iter())
            .filter(|(s, b)| (sigmoid(**s) >= 0.5) == (**b >= 0.5))
            .count();
        hits as f64 / self.samples() as f64
    }

    /// The attack problem with perturbation bound `zeta`; `zeta = 0` pins
    /// `x = 0`, giving plain regularised training.
    pub fn problem_with_bound(self: &Arc<Self>, zeta: f64) -> Result<MinMaxProblem, ProblemError> {
        if !(zeta >= 0.0) {
            return Err(ProblemError::InvalidParameter(format!(
                "perturbation bound must be nonnegative, got {zeta}"
            )));
        }
        let p = self.dim();
        let fd = self.clone();
        let gd = self.clone();
        let mut lower = vec![-zeta; p];
        let mut upper = vec![zeta; p];
        lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, p));
        upper.extend(std::iter::repeat_n(f64::INFINITY, p));
        MinMaxProblem::new("poisoning", p, p, move |z: &JointPoint| fd.objective(z))
            .with_operator(move |z: &JointPoint| gd.operator(z))
            .with_set(FeasibleSet::Box { lower, upper })
    }

    pub fn problem(self: &Arc<Self>) -> Result<MinMaxProblem, ProblemError> {
        self.problem_with_bound(self.params.zeta)
    }

    /// CSV with header `feature_0..feature_{p-1},label`; poisoned rows first.
    pub fn dump_csv(&self, path: impl AsRef<Path>) -> Result<(), ProblemError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("feature_{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.samples() {
            let mut row: Vec<String> = self.features.row(i).iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{}", self.labels[i]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a dump; the first `round(corruption * rows)` rows are poisoned.
    pub fn load_csv(path: impl AsRef<Path>, params: PoisoningParams) -> Result<Self, ProblemError> {
        let mut r = csv::Reader::from_path(path)?;
        let cols = r.headers()?.len();
        if cols < 2 || r.headers()?.get(cols - 1) != Some("label") {
            return Err(ProblemError::Format("last column must be `label`".into()));
        }
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                values.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| ProblemError::Format(format!("row {}: {e}", rows + 1)))?,
                );
            }
            rows += 1;
        }
        let full = DMatrix::from_row_slice(rows, cols, &values);
        let labels = full.column(cols - 1).into_owned();
        if labels.iter().any(|b| *b != 0.0 && *b != 1.0) {
            return Err(ProblemError::Format("labels must be 0 or 1".into()));
        }
        let params = PoisoningParams {
            samples: rows,
            features: cols - 1,
            ..params
        };
        Ok(Self {
            features: full.columns(0, cols - 1).into_owned(),
            labels,
            poisoned: poisoned_count(rows, params.corruption),
            params,
        })
    }
}

fn poisoned_count(samples: usize, corruption: f64) -> usize {
    ((samples as f64 * corruption).round() as usize).min(samples)
}

/// Generates the default-sized dataset and its attack problem.
pub fn poisoning_problem(seed: u64) -> (MinMaxProblem, Arc<PoisoningData>) {
    let data = Arc::new(PoisoningData::generate(PoisoningParams::default(), seed));
    let problem = data.problem().expect("default parameters are valid");
    (problem, data)
}
