//! Robust least squares: `min_x max_{|delta| <= rho} |A x - y0 + delta|^2`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{DualVector, JointPoint};

use super::{Block, FeasibleSet, MinMaxProblem, ProblemError, ProblemMetadata};

/// Data of one robust least-squares instance. `a` is `rows x cols`; the
/// minimiser `x` lives in `R^cols` and the perturbation `delta` in `R^rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsInstance {
    pub a: DMatrix<f64>,
    pub y0: DVector<f64>,
    pub rho: f64,
}

impl RlsInstance {
    /// Entries of `A` and `y0` drawn i.i.d. from `N(0, 1)`.
    pub fn random(rows: usize, cols: usize, rho: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
        let y0 = DVector::from_fn(rows, |_, _| StandardNormal.sample(&mut rng));
        Self { a, y0, rho }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `A x - y0 + delta`.
    pub fn residual(&self, z: &JointPoint) -> DVector<f64> {
        &self.a * &z.x - &self.y0 + &z.y
    }

    /// Lipschitz constant of `F`: `2 (sigma_max(A)^2 + 1)`.
    pub fn lipschitz_operator(&self) -> f64 {
        let gram = &self.a * self.a.transpose();
        let top = gram.symmetric_eigen().eigenvalues.max();
        2.0 * (top + 1.0)
    }

    /// Writes `A` and `y0` as CSV with header `a_0..a_{cols-1},y0`.
    pub fn dump_csv(&self, path: impl AsRef<Path>) -> Result<(), ProblemError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.cols()).map(|j| format!("a_{j}")).collect();
        header.push("y0".into());
        w.write_record(&header)?;
        for i in 0..self.rows() {
            let mut row: Vec<String> = (0..self.cols()).map(|j| format!("{:e}", self.a[(i, j)])).collect();
            row.push(format!("{:e}", self.y0[i]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>, rho: f64) -> Result<Self, ProblemError> {
        let mut r = csv::Reader::from_path(path)?;
        let cols = r.headers()?.len();
        if cols < 2 {
            return Err(ProblemError::Format("expected at least one column of A and y0".into()));
        }
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                values.push(field.trim().parse::<f64>().map_err(|e| {
                    ProblemError::Format(format!("row {}: {e}", rows + 1))
                })?);
            }
            rows += 1;
        }
        let full = DMatrix::from_row_slice(rows, cols, &values);
        Ok(Self {
            a: full.columns(0, cols - 1).into_owned(),
            y0: full.column(cols - 1).into_owned(),
            rho,
        })
    }

    pub fn problem(&self) -> Result<MinMaxProblem, ProblemError> {
        rls_problem(self.a.clone(), self.y0.clone(), self.rho)
    }
}

/// Builds the problem from `A` (`rows x cols`), `y0` and the ball radius.
pub fn rls_problem(a: DMatrix<f64>, y0: DVector<f64>, rho_ball: f64) -> Result<MinMaxProblem, ProblemError> {
    if y0.len() != a.nrows() {
        return Err(ProblemError::DimensionMismatch(format!(
            "A has {} rows but y0 has length {}",
            a.nrows(),
            y0.len()
        )));
    }
    if !(rho_ball > 0.0 && rho_ball.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!(
            "ball radius must be positive, got {rho_ball}"
        )));
    }
    let inst = Arc::new(RlsInstance { a, y0, rho: rho_ball });
    let (rows, cols) = (inst.rows(), inst.cols());
    let l1 = inst.lipschitz_operator();
    let f_inst = inst.clone();
    let g_inst = inst.clone();
    MinMaxProblem::new("rls", cols, rows, move |z: &JointPoint| f_inst.residual(z).norm_squared())
        .with_operator(move |z: &JointPoint| {
            let r = g_inst.residual(z) * 2.0;
            DualVector::new(g_inst.a.tr_mul(&r), -r)
        })
        .with_set(FeasibleSet::Ball {
            center: vec![0.0; rows],
            radius: rho_ball,
            block: Block::Y,
        })
        .map(|p| {
            p.with_metadata(ProblemMetadata {
                l1: Some(l1),
                ..Default::default()
            })
        })
}
