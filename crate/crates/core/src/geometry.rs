//! Block vectors, the block-diagonal metric `B = diag(B1, B2)` and Gaussian
//! sampling from `N(0, B^{-1})`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors raised by metric construction and block-vector operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("block {block} is not square ({rows}x{cols})")]
    NotSquare {
        block: usize,
        rows: usize,
        cols: usize,
    },
    #[error("block {block} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { block: usize, asymmetry: f64 },
    #[error("block {block} is not positive definite (eigenvalues in [{min:e}, {max:e}])")]
    NotPositiveDefinite { block: usize, min: f64, max: f64 },
    #[error("dimension mismatch: expected ({n}, {m}), got ({got_n}, {got_m})")]
    DimensionMismatch {
        n: usize,
        m: usize,
        got_n: usize,
        got_m: usize,
    },
    #[error("metric has an empty block")]
    EmptyBlock,
}

/// A point `(x, y)` of the joint space `R^n x R^m`.
///
/// The same type stores dual vectors (gradients, oracle outputs) whose
/// y-block already carries the operator sign, i.e. `F = (grad_x f, -grad_y f)`.
#[derive(Clone, PartialEq)]
pub struct BlockVector {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// Primal element of `Z`.
pub type JointPoint = BlockVector;
/// Dual element, typically an operator value `F(z)` or an oracle estimate.
pub type DualVector = BlockVector;

impl BlockVector {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        Self { x, y }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            y: DVector::zeros(m),
        }
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        Self {
            x: DVector::from_column_slice(x),
            y: DVector::from_column_slice(y),
        }
    }

    /// Splits a flat `[x..., y...]` slice after `n` entries.
    pub fn from_flat(flat: &[f64], n: usize) -> Self {
        assert!(n <= flat.len(), "split index beyond slice length");
        Self::from_slices(&flat[..n], &flat[n..])
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Entry `i` of the flattened `[x, y]` vector.
    pub fn get(&self, i: usize) -> f64 {
        if i < self.x.len() {
            self.x[i]
        } else {
            self.y[i - self.x.len()]
        }
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let n = self.x.len();
        if i < n {
            self.x[i] = value;
        } else {
            self.y[i - n] = value;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(self.y.iter()).copied()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            x: self.x.map(&mut f),
            y: self.y.map(&mut f),
        }
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            x: self.x.zip_map(&other.x, &mut f),
            y: self.y.zip_map(&other.y, &mut f),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    /// Plain Euclidean norm `|z|`.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.x.norm_squared() + self.y.norm_squared()
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| v * alpha)
    }

    /// Flips the sign of the y-block; converts between `grad f` and `F`.
    pub fn negate_y(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: -&self.y,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl fmt::Debug for BlockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockVector")
            .field("x", &self.x.as_slice())
            .field("y", &self.y.as_slice())
            .finish()
    }
}

impl Add<&BlockVector> for &BlockVector {
    type Output = BlockVector;
    fn add(self, rhs: &BlockVector) -> BlockVector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub<&BlockVector> for &BlockVector {
    type Output = BlockVector;
    fn sub(self, rhs: &BlockVector) -> BlockVector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &BlockVector {
    type Output = BlockVector;
    fn mul(self, rhs: f64) -> BlockVector {
        self.scale(rhs)
    }
}

impl Neg for &BlockVector {
    type Output = BlockVector;
    fn neg(self) -> BlockVector {
        self.map(|v| -v)
    }
}

/// One SPD diagonal block of the metric.
///
/// Scalar and diagonal blocks skip the dense factorisations so that `B = I`
/// applies as an exact identity.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricBlock {
    Scalar { dim: usize, lambda: f64 },
    Diagonal(DVector<f64>),
    Dense {
        matrix: DMatrix<f64>,
        inverse: DMatrix<f64>,
        /// Lower Cholesky factor of the inverse, used for sampling.
        inverse_factor: DMatrix<f64>,
    },
}

impl MetricBlock {
    fn dim(&self) -> usize {
        match self {
            Self::Scalar { dim, .. } => *dim,
            Self::Diagonal(d) => d.len(),
            Self::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Scalar { lambda, .. } => v * *lambda,
            Self::Diagonal(d) => v.component_mul(d),
            Self::Dense { matrix, .. } => matrix * v,
        }
    }

    fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Scalar { lambda, .. } => v / *lambda,
            Self::Diagonal(d) => v.component_div(d),
            Self::Dense { inverse, .. } => inverse * v,
        }
    }

    /// Maps a standard normal vector to a draw from `N(0, block^{-1})`.
    fn color(&self, w: DVector<f64>) -> DVector<f64> {
        match self {
            Self::Scalar { lambda, .. } => w / lambda.sqrt(),
            Self::Diagonal(d) => w.zip_map(d, |wi, di| wi / di.sqrt()),
            Self::Dense { inverse_factor, .. } => inverse_factor * w,
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Scalar { dim, lambda } => DMatrix::identity(*dim, *dim) * *lambda,
            Self::Diagonal(d) => DMatrix::from_diagonal(d),
            Self::Dense { matrix, .. } => matrix.clone(),
        }
    }

    fn eigen_range(&self) -> (f64, f64) {
        match self {
            Self::Scalar { lambda, .. } => (*lambda, *lambda),
            Self::Diagonal(d) => (d.min(), d.max()),
            Self::Dense { matrix, .. } => {
                let eig = matrix.clone().symmetric_eigen().eigenvalues;
                (eig.min(), eig.max())
            }
        }
    }
}

/// Relative threshold under which an eigenvalue counts as zero.
const SPD_RELATIVE_TOL: f64 = 1e-12;

fn check_range(block: usize, min: f64, max: f64) -> Result<(), GeometryError> {
    if !(min.is_finite() && max.is_finite()) || max <= 0.0 || min <= SPD_RELATIVE_TOL * max {
        return Err(GeometryError::NotPositiveDefinite { block, min, max });
    }
    Ok(())
}

/// Block-diagonal SPD metric `B = diag(B1, B2)` with cached spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    b1: MetricBlock,
    b2: MetricBlock,
    lambda_min: f64,
    lambda_max: f64,
}

impl MetricMatrix {
    fn from_blocks(b1: MetricBlock, b2: MetricBlock) -> Result<Self, GeometryError> {
        if b1.dim() == 0 && b2.dim() == 0 {
            return Err(GeometryError::EmptyBlock);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, b) in [&b1, &b2].into_iter().enumerate() {
            if b.dim() == 0 {
                continue;
            }
            let (a, z) = b.eigen_range();
            check_range(i + 1, a, z)?;
            lo = lo.min(a);
            hi = hi.max(z);
        }
        check_range(0, lo, hi)?;
        Ok(Self {
            b1,
            b2,
            lambda_min: lo,
            lambda_max: hi,
        })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::scaled_identity(n, m, 1.0).expect("identity is SPD")
    }

    /// `B = lambda I`.
    pub fn scaled_identity(n: usize, m: usize, lambda: f64) -> Result<Self, GeometryError> {
        Self::scaled_blocks(n, m, lambda, lambda)
    }

    /// `B = diag(lambda1 I_n, lambda2 I_m)`.
    pub fn scaled_blocks(
        n: usize,
        m: usize,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self, GeometryError> {
        Self::from_blocks(
            MetricBlock::Scalar {
                dim: n,
                lambda: lambda1,
            },
            MetricBlock::Scalar {
                dim: m,
                lambda: lambda2,
            },
        )
    }

    /// Diagonal metric from its x- and y-block entries.
    pub fn diagonal(d1: &[f64], d2: &[f64]) -> Result<Self, GeometryError> {
        Self::from_blocks(
            MetricBlock::Diagonal(DVector::from_column_slice(d1)),
            MetricBlock::Diagonal(DVector::from_column_slice(d2)),
        )
    }

    /// General SPD blocks. Symmetry is checked to a relative `1e-12`.
    pub fn new(b1: DMatrix<f64>, b2: DMatrix<f64>) -> Result<Self, GeometryError> {
        let dense = |block: usize, mat: DMatrix<f64>| -> Result<MetricBlock, GeometryError> {
            if !mat.is_square() {
                return Err(GeometryError::NotSquare {
                    block,
                    rows: mat.nrows(),
                    cols: mat.ncols(),
                });
            }
            if mat.nrows() == 0 {
                return Ok(MetricBlock::Scalar {
                    dim: 0,
                    lambda: 1.0,
                });
            }
            let scale = mat.amax().max(f64::MIN_POSITIVE);
            let asymmetry = (&mat - mat.transpose()).amax();
            if asymmetry > 1e-12 * scale {
                return Err(GeometryError::NotSymmetric { block, asymmetry });
            }
            let sym = (&mat + mat.transpose()) * 0.5;
            let eig = sym.clone().symmetric_eigen().eigenvalues;
            check_range(block, eig.min(), eig.max())?;
            let inverse = sym
                .clone()
                .cholesky()
                .ok_or(GeometryError::NotPositiveDefinite {
                    block,
                    min: eig.min(),
                    max: eig.max(),
                })?
                .inverse();
            let inverse = (&inverse + inverse.transpose()) * 0.5;
            let inverse_factor = inverse
                .clone()
                .cholesky()
                .ok_or(GeometryError::NotPositiveDefinite {
                    block,
                    min: eig.min(),
                    max: eig.max(),
                })?
                .l();
            Ok(MetricBlock::Dense {
                matrix: sym,
                inverse,
                inverse_factor,
            })
        };
        Self::from_blocks(dense(1, b1)?, dense(2, b2)?)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.b1.dim(), self.b2.dim())
    }

    pub fn dim(&self) -> usize {
        self.b1.dim() + self.b2.dim()
    }

    pub fn blocks(&self) -> (&MetricBlock, &MetricBlock) {
        (&self.b1, &self.b2)
    }

    /// Smallest eigenvalue of `B`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest eigenvalue of `B`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Condition number `lambda_max / lambda_min`.
    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    /// `Some((lambda1, lambda2))` if both blocks are multiples of the identity.
    pub fn scalar_blocks(&self) -> Option<(f64, f64)> {
        let scalar = |b: &MetricBlock| match b {
            MetricBlock::Scalar { lambda, .. } => Some(*lambda),
            MetricBlock::Diagonal(d) if d.is_empty() => Some(1.0),
            MetricBlock::Diagonal(d) if d.iter().all(|v| *v == d[0]) => Some(d[0]),
            _ => None,
        };
        Some((scalar(&self.b1)?, scalar(&self.b2)?))
    }

    pub fn is_identity(&self) -> bool {
        self.scalar_blocks() == Some((1.0, 1.0))
    }

    pub fn to_dense(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.b1.to_dense(), self.b2.to_dense())
    }

    fn check(&self, v: &BlockVector) -> Result<(), GeometryError> {
        let (n, m) = self.dims();
        if v.dims() != (n, m) {
            return Err(GeometryError::DimensionMismatch {
                n,
                m,
                got_n: v.n(),
                got_m: v.m(),
            });
        }
        Ok(())
    }

    /// `B z`.
    pub fn apply(&self, z: &BlockVector) -> BlockVector {
        BlockVector::new(self.b1.apply(&z.x), self.b2.apply(&z.y))
    }

    /// `B^{-1} g`.
    pub fn apply_inverse(&self, g: &BlockVector) -> BlockVector {
        BlockVector::new(self.b1.apply_inverse(&g.x), self.b2.apply_inverse(&g.y))
    }

    /// Primal norm `<z, B z>^{1/2}`.
    pub fn primal_norm(&self, z: &JointPoint) -> Result<f64, GeometryError> {
        self.check(z)?;
        Ok(z.dot(&self.apply(z)).max(0.0).sqrt())
    }

    /// Dual norm `<g, B^{-1} g>^{1/2}`.
    pub fn dual_norm(&self, g: &DualVector) -> Result<f64, GeometryError> {
        self.check(g)?;
        Ok(g.dot(&self.apply_inverse(g)).max(0.0).sqrt())
    }

    /// One draw `u ~ N(0, B^{-1})`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JointPoint {
        let (n, m) = self.dims();
        let wx = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let wy = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        BlockVector::new(self.b1.color(wx), self.b2.color(wy))
    }

    /// `count` independent draws from `N(0, B^{-1})`.
    pub fn sample_many<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<JointPoint> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// Primal norm with respect to `metric`; see [`MetricMatrix::primal_norm`].
pub fn primal_norm(z: &JointPoint, metric: &MetricMatrix) -> Result<f64, GeometryError> {
    metric.primal_norm(z)
}

/// Dual norm with respect to `metric`; see [`MetricMatrix::dual_norm`].
pub fn dual_norm(g: &DualVector, metric: &MetricMatrix) -> Result<f64, GeometryError> {
    metric.dual_norm(g)
}

/// Euclidean norm `|z|`.
pub fn euclidean_norm(z: &BlockVector) -> f64 {
    z.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norms_under_scaled_identity() {
        let b = MetricMatrix::scaled_identity(1, 1, 4.0).unwrap();
        let z = BlockVector::from_slices(&[3.0], &[4.0]);
        assert_relative_eq!(b.primal_norm(&z).unwrap(), 10.0);
        assert_relative_eq!(b.dual_norm(&z).unwrap(), 2.5);
        assert_relative_eq!(z.norm(), 5.0);
        assert_eq!(b.kappa(), 1.0);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            MetricMatrix::new(bad, DMatrix::identity(1, 1)),
            Err(GeometryError::NotPositiveDefinite { block: 1, .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(
            MetricMatrix::new(DMatrix::identity(1, 1), asym),
            Err(GeometryError::NotSymmetric { block: 2, .. })
        ));
        let tiny = MetricMatrix::diagonal(&[1.0, 1e-13], &[1.0]);
        assert!(tiny.is_err());
    }

    #[test]
    fn dense_block_spectrum_and_inverse() {
        let b1 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let b = MetricMatrix::new(b1, DMatrix::identity(1, 1) * 5.0).unwrap();
        assert_relative_eq!(b.lambda_min(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(b.lambda_max(), 5.0, epsilon = 1e-12);
        let g = BlockVector::from_slices(&[1.0, -2.0], &[3.0]);
        let back = b.apply(&b.apply_inverse(&g));
        assert_relative_eq!((&back - &g).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = MetricMatrix::identity(2, 1);
        let z = BlockVector::from_slices(&[1.0], &[1.0]);
        assert!(matches!(
            b.primal_norm(&z),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_sampling_is_standard_normal_bits() {
        let b = MetricMatrix::identity(2, 2);
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let u = b.sample(&mut r1);
        let raw: Vec<f64> = (0..4).map(|_| r2.sample(StandardNormal)).collect();
        assert_eq!(u.to_vec(), raw);
    }

    #[test]
    fn dense_sampling_covariance() {
        let b1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = MetricMatrix::new(b1.clone(), DMatrix::identity(1, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 200_000;
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..draws {
            let u = b.sample(&mut rng);
            cov += &u.x * u.x.transpose();
        }
        cov /= draws as f64;
        let target = b1.try_inverse().unwrap();
        assert!((cov - target).amax() < 0.01);
    }
}
