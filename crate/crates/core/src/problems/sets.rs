//! Closed convex feasible sets with closed-form projections.

use crate::geometry::{JointPoint, MetricMatrix};

use super::ProblemError;

/// Which block a [`FeasibleSet::Ball`] constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
    /// The whole vector the set is applied to.
    Joint,
}

/// A contiguous coordinate range `[start, start + len)` of the flattened
/// `[x, y]` vector together with the set constraining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub start: usize,
    pub len: usize,
    pub set: FeasibleSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Unconstrained,
    /// Per-coordinate bounds over the flattened vector; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball {
        center: Vec<f64>,
        radius: f64,
        block: Block,
    },
    NonnegativeOrthant,
    /// Components must partition the coordinates in order.
    Product(Vec<Component>),
}

impl FeasibleSet {
    /// `[-bx, bx]^n x [-by, by]^m`.
    pub fn symmetric_box(n: usize, m: usize, bx: f64, by: f64) -> Self {
        let mut lower = vec![-bx; n];
        lower.extend(std::iter::repeat_n(-by, m));
        FeasibleSet::Box {
            upper: lower.iter().map(|v| -v).collect(),
            lower,
        }
    }

    /// `X x Y` from a set on `R^n` and a set on `R^m`.
    pub fn product_of_blocks(n: usize, m: usize, x: FeasibleSet, y: FeasibleSet) -> Self {
        FeasibleSet::Product(vec![
            Component {
                start: 0,
                len: n,
                set: x,
            },
            Component {
                start: n,
                len: m,
                set: y,
            },
        ])
    }

    pub fn is_unconstrained(&self) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .chain(upper)
                .all(|v| v.is_infinite()),
            FeasibleSet::Product(parts) => parts.iter().all(|c| c.set.is_unconstrained()),
            _ => false,
        }
    }

    /// Checks shape invariants against the problem dimensions.
    pub fn validate(&self, n: usize, m: usize) -> Result<(), ProblemError> {
        self.validate_len(n + m, Some(n))
    }

    fn validate_len(&self, d: usize, split: Option<usize>) -> Result<(), ProblemError> {
        let bad = |msg: String| Err(ProblemError::InvalidSet(msg));
        match self {
            FeasibleSet::Unconstrained | FeasibleSet::NonnegativeOrthant => Ok(()),
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != d || upper.len() != d {
                    return bad(format!(
                        "box bounds have lengths {}/{} for dimension {d}",
                        lower.len(),
                        upper.len()
                    ));
                }
                if let Some(i) = (0..d).find(|&i| !(lower[i] <= upper[i])) {
                    return bad(format!(
                        "box lower bound exceeds upper bound at coordinate {i}"
                    ));
                }
                Ok(())
            }
            FeasibleSet::Ball {
                center,
                radius,
                block,
            } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
                let want = match (block, split) {
                    (Block::Joint, _) => d,
                    (Block::X, Some(n)) => n,
                    (Block::Y, Some(n)) => d - n,
                    (_, None) => {
                        return bad("block-restricted ball inside a product component".into())
                    }
                };
                if center.len() != want {
                    return bad(format!(
                        "ball center has length {} but the block has {want}",
                        center.len()
                    ));
                }
                Ok(())
            }
            FeasibleSet::Product(parts) => {
                let mut next = 0;
                for c in parts {
                    if c.start != next {
                        return bad(format!(
                            "product components must partition coordinates; gap or overlap at {next}"
                        ));
                    }
                    c.set.validate_len(c.len, None)?;
                    next += c.len;
                }
                if next != d {
                    return bad(format!("product covers {next} of {d} coordinates"));
                }
                Ok(())
            }
        }
    }

    fn project_slice(&self, v: &mut [f64], split: Option<usize>) {
        match self {
            FeasibleSet::Unconstrained => {}
            FeasibleSet::Box { lower, upper } => {
                for ((vi, lo), hi) in v.iter_mut().zip(lower).zip(upper) {
                    *vi = vi.clamp(*lo, *hi);
                }
            }
            FeasibleSet::NonnegativeOrthant => {
                for vi in v.iter_mut() {
                    *vi = vi.max(0.0);
                }
            }
            FeasibleSet::Ball {
                center,
                radius,
                block,
            } => {
                let part: &mut [f64] = match (block, split) {
                    (Block::X, Some(n)) => &mut v[..n],
                    (Block::Y, Some(n)) => &mut v[n..],
                    _ => v,
                };
                let dist = part
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let s = radius / dist;
                    for (a, c) in part.iter_mut().zip(center) {
                        *a = c + (*a - c) * s;
                    }
                }
            }
            FeasibleSet::Product(parts) => {
                for c in parts {
                    c.set.project_slice(&mut v[c.start..c.start + c.len], None);
                }
            }
        }
    }

    fn contains_slice(&self, v: &[f64], split: Option<usize>, tol: f64) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol),
            FeasibleSet::NonnegativeOrthant => v.iter().all(|x| *x >= -tol),
            FeasibleSet::Ball {
                center,
                radius,
                block,
            } => {
                let part = match (block, split) {
                    (Block::X, Some(n)) => &v[..n],
                    (Block::Y, Some(n)) => &v[n..],
                    _ => v,
                };
                let dist = part
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                dist <= radius + tol
            }
            FeasibleSet::Product(parts) => parts
                .iter()
                .all(|c| c.set.contains_slice(&v[c.start..c.start + c.len], None, tol)),
        }
    }

    /// Euclidean projection, ignoring any metric.
    pub fn project_euclidean(&self, z: &JointPoint) -> JointPoint {
        if matches!(self, FeasibleSet::Unconstrained) {
            return z.clone();
        }
        let mut v = z.to_vec();
        self.project_slice(&mut v, Some(z.n()));
        JointPoint::from_flat(&v, z.n())
    }

    /// Projection in the `B`-norm. Closed forms are available only when both
    /// blocks of `B` are multiples of the identity (and, for a ball spanning
    /// both blocks, the same multiple).
    pub fn project(&self, z: &JointPoint, metric: &MetricMatrix) -> Result<JointPoint, ProblemError> {
        if self.is_unconstrained() {
            return Ok(z.clone());
        }
        match metric.scalar_blocks() {
            None => Err(ProblemError::UnsupportedProjection(
                "active constraints require B to be a multiple of the identity per block".into(),
            )),
            Some((l1, l2)) if l1 != l2 && self.couples_blocks(z.n()) => {
                Err(ProblemError::UnsupportedProjection(
                    "a ball spanning both blocks requires equal block scalings".into(),
                ))
            }
            Some(_) => Ok(self.project_euclidean(z)),
        }
    }

    fn couples_blocks(&self, n: usize) -> bool {
        match self {
            FeasibleSet::Ball {
                block: Block::Joint,
                ..
            } => true,
            FeasibleSet::Product(parts) => parts.iter().any(|c| {
                matches!(c.set, FeasibleSet::Ball { .. }) && c.start < n && c.start + c.len > n
            }),
            _ => false,
        }
    }

    pub fn contains(&self, z: &JointPoint, tol: f64) -> bool {
        self.contains_slice(&z.to_vec(), Some(z.n()), tol)
    }

    /// Euclidean diameter; infinite for unbounded sets.
    pub fn diameter(&self, n: usize, m: usize) -> f64 {
        self.diameter_len(n + m, Some(n))
    }

    fn diameter_len(&self, d: usize, split: Option<usize>) -> f64 {
        match self {
            FeasibleSet::Unconstrained | FeasibleSet::NonnegativeOrthant => {
                if d == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            FeasibleSet::Ball { radius, block, .. } => match (block, split) {
                (Block::X, Some(n)) if d > n => f64::INFINITY,
                (Block::Y, Some(n)) if n > 0 => f64::INFINITY,
                _ => 2.0 * radius,
            },
            FeasibleSet::Product(parts) => parts
                .iter()
                .map(|c| c.set.diameter_len(c.len, None).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}
