//! Objective oracles with exactly computable proximal subdifferentials.
//!
//! Every objective here is real-valued on the whole space. For the convex
//! classes the proximal subdifferential coincides with the convex one, so a
//! descriptor lists exactly the subgradients at the base point (up to the
//! activity tolerance on kinks).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{min_norm_in_hull, DEFAULT_HULL_TOL};
use crate::linalg::{lambda_max, lambda_min, Matrix};
use crate::vector::{dot_slices, Vector};

/// Relative tolerance for deciding that a max-piece is active:
/// piece `i` is active iff `max_j g_j - g_i <= ACTIVITY_TOL * (1 + |max_j g_j|)`.
pub const ACTIVITY_TOL: f64 = 1e-10;

/// A coordinate of an l1 term is treated as sitting on its kink iff
/// `|x_i| <= KINK_TOL * (1 + |x|_inf)`.
pub const KINK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    Smooth,
    ConvexQuadratic,
    MaxOfSmooth,
    L1Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vector,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `1/2 |x|^2 - <x, y> + 3`, i.e. `1/2 |x - y|^2` up to a constant.
    L2Quadratic { y: Vector },
    /// `1/2 x^T A x - <b, x> + c`.
    Quadratic { a: Matrix, b: Vector, c: f64 },
    /// `max_i (<a_i, x> + b_i) + (weight / 2) |x|^2`.
    MaxAffine {
        pieces: Vec<AffinePiece>,
        weight: f64,
    },
    /// `lambda |x|_1 + 1/2 x^T A x - <b, x>`.
    L1Composite { lambda: f64, a: Matrix, b: Vector },
    /// `(1 - x1)^2 + 100 (x2 - x1^2)^2`.
    Rosenbrock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveOracle {
    id: String,
    dim: usize,
    objective: Objective,
    convex: bool,
    known_minimizer: Option<Vector>,
    known_min_value: Option<f64>,
}

/// Closed interval `[lo, hi]`, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// Finite description of the proximal subdifferential at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdifferentialDescriptor {
    Singleton(Vector),
    /// Convex hull of the listed generators.
    FiniteHull(Vec<Vector>),
    /// `{ smooth + s : s_i in intervals[i] }`.
    BoxProduct {
        smooth: Vector,
        intervals: Vec<Interval>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    #[default]
    MinNorm,
    FirstGenerator,
}

impl SubdifferentialDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            Self::Singleton(v) => v.dim(),
            Self::FiniteHull(g) => g.first().map_or(0, Vector::dim),
            Self::BoxProduct { smooth, .. } => smooth.dim(),
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            Self::Singleton(_) => true,
            Self::FiniteHull(g) => g.len() == 1,
            Self::BoxProduct { intervals, .. } => intervals.iter().all(|i| i.lo == i.hi),
        }
    }

    /// Euclidean distance from `p` to the set.
    pub fn distance_to(&self, p: &Vector) -> Result<f64> {
        match self {
            Self::Singleton(v) => v.distance(p),
            Self::FiniteHull(gens) => {
                let shifted = gens.iter().map(|g| g.sub(p)).collect::<Result<Vec<_>>>()?;
                Ok(min_norm_in_hull(&shifted, DEFAULT_HULL_TOL)?.norm())
            }
            Self::BoxProduct { smooth, intervals } => {
                smooth.check_dim(p)?;
                Ok(smooth
                    .iter()
                    .zip(intervals)
                    .zip(p.iter())
                    .map(|((s, iv), pi)| {
                        let d = pi - (s + iv.clamp(pi - s));
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt())
            }
        }
    }

    /// Extreme points of the set. Box corners are enumerated, so this errors
    /// beyond 2^20 corners.
    pub fn generators(&self) -> Result<Vec<Vector>> {
        match self {
            Self::Singleton(v) => Ok(vec![v.clone()]),
            Self::FiniteHull(g) => Ok(g.clone()),
            Self::BoxProduct { smooth, intervals } => {
                let kinked: Vec<usize> = (0..intervals.len())
                    .filter(|&i| intervals[i].lo < intervals[i].hi)
                    .collect();
                if kinked.len() > 20 {
                    return Err(Error::InvalidParameter(format!(
                        "box has 2^{} corners, too many to enumerate",
                        kinked.len()
                    )));
                }
                let base: Vec<f64> = smooth
                    .iter()
                    .zip(intervals)
                    .map(|(s, iv)| s + iv.lo)
                    .collect();
                (0..1usize << kinked.len())
                    .map(|mask| {
                        let mut c = base.clone();
                        for (bit, &i) in kinked.iter().enumerate() {
                            if mask & (1 << bit) != 0 {
                                c[i] = smooth[i] + intervals[i].hi;
                            }
                        }
                        Vector::new(c)
                    })
                    .collect()
            }
        }
    }

    /// `sup_{g in self} dist(g, other)`: how far this set sticks out of `other`.
    pub fn excess_over(&self, other: &SubdifferentialDescriptor) -> Result<f64> {
        if let (
            Self::BoxProduct {
                smooth: s1,
                intervals: i1,
            },
            Self::BoxProduct {
                smooth: s2,
                intervals: i2,
            },
        ) = (self, other)
        {
            s1.check_dim(s2)?;
            // Separable: the sup over a box of a sum of convex 1-D distances is
            // attained coordinatewise at an interval endpoint.
            let mut total = 0.0;
            for k in 0..s1.dim() {
                let target = Interval {
                    lo: s2[k] + i2[k].lo,
                    hi: s2[k] + i2[k].hi,
                };
                let worst = [s1[k] + i1[k].lo, s1[k] + i1[k].hi]
                    .into_iter()
                    .map(|e| (e - target.clamp(e)).abs())
                    .fold(0.0, f64::max);
                total += worst * worst;
            }
            return Ok(total.sqrt());
        }
        self.generators()?
            .iter()
            .map(|g| other.distance_to(g))
            .try_fold(0.0_f64, |m, d| d.map(|d| m.max(d)))
    }
}

/// Picks an element of the set described by `d`.
pub fn select_subgradient(d: &SubdifferentialDescriptor, rule: SelectionRule) -> Result<Vector> {
    use SubdifferentialDescriptor::*;
    match (d, rule) {
        (Singleton(v), _) => Ok(v.clone()),
        (FiniteHull(gens), SelectionRule::MinNorm) => min_norm_in_hull(gens, DEFAULT_HULL_TOL),
        (FiniteHull(gens), SelectionRule::FirstGenerator) => {
            gens.first().cloned().ok_or(Error::EmptyHull)
        }
        (BoxProduct { smooth, intervals }, SelectionRule::MinNorm) => Vector::new(
            smooth
                .iter()
                .zip(intervals)
                .map(|(s, iv)| s + iv.clamp(-s))
                .collect(),
        ),
        (BoxProduct { smooth, intervals }, SelectionRule::FirstGenerator) => Vector::new(
            smooth
                .iter()
                .zip(intervals)
                .map(|(s, iv)| s + iv.lo)
                .collect(),
        ),
    }
}

impl ObjectiveOracle {
    /// Quadratic objective `1/2 |x|^2 - <x, y> + 3` on `R^dim(y)`.
    pub fn l2_quadratic(y: Vector) -> Self {
        let dim = y.dim();
        let value = 3.0 - 0.5 * y.dot(&y).unwrap();
        Self {
            id: "l2_quadratic".into(),
            dim,
            convex: true,
            known_minimizer: Some(y.clone()),
            known_min_value: Some(value),
            objective: Objective::L2Quadratic { y },
        }
    }

    /// `1/2 x^T A x - <b, x> + c`. Convexity is decided from the smallest
    /// eigenvalue of `A`.
    pub fn quadratic(id: impl Into<String>, a: Matrix, b: Vector, c: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        if !a.is_symmetric(1e-12) {
            return Err(Error::InvalidParameter(
                "quadratic matrix must be symmetric".into(),
            ));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter(
                "constant term must be finite".into(),
            ));
        }
        let convex = is_psd(&a);
        Ok(Self {
            id: id.into(),
            dim: a.dim(),
            objective: Objective::Quadratic { a, b, c },
            convex,
            known_minimizer: None,
            known_min_value: None,
        })
    }

    /// `max_i (<a_i, x> + b_i) + (weight / 2) |x|^2`.
    pub fn max_affine(
        id: impl Into<String>,
        pieces: Vec<AffinePiece>,
        weight: f64,
    ) -> Result<Self> {
        let first = pieces.first().ok_or(Error::EmptyPieces)?;
        let dim = first.a.dim();
        for p in &pieces {
            first.a.check_dim(&p.a)?;
            if !p.b.is_finite() {
                return Err(Error::InvalidParameter(
                    "piece offsets must be finite".into(),
                ));
            }
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic weight must be >= 0, got {weight}"
            )));
        }
        Ok(Self {
            id: id.into(),
            dim,
            objective: Objective::MaxAffine { pieces, weight },
            convex: true,
            known_minimizer: None,
            known_min_value: None,
        })
    }

    /// `lambda |x|_1 + 1/2 x^T A x - <b, x>` with `A` symmetric PSD.
    pub fn l1_composite(id: impl Into<String>, lambda: f64, a: Matrix, b: Vector) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be > 0, got {lambda}"
            )));
        }
        if a.dim() != b.dim() {
            return Err(Error::Dimension {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        if !a.is_symmetric(1e-12) || !is_psd(&a) {
            return Err(Error::InvalidParameter(
                "l1 composite matrix must be symmetric PSD".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            dim: a.dim(),
            objective: Objective::L1Composite { lambda, a, b },
            convex: true,
            known_minimizer: None,
            known_min_value: None,
        })
    }

    pub fn rosenbrock() -> Self {
        Self {
            id: "rosenbrock".into(),
            dim: 2,
            objective: Objective::Rosenbrock,
            convex: false,
            known_minimizer: Some(Vector::from_slice(&[1.0, 1.0]).unwrap()),
            known_min_value: Some(0.0),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_known_minimum(mut self, minimizer: Vector, value: f64) -> Result<Self> {
        if minimizer.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: minimizer.dim(),
            });
        }
        self.known_minimizer = Some(minimizer);
        self.known_min_value = Some(value);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn convex(&self) -> bool {
        self.convex
    }

    pub fn known_minimizer(&self) -> Option<&Vector> {
        self.known_minimizer.as_ref()
    }

    pub fn known_min_value(&self) -> Option<f64> {
        self.known_min_value
    }

    pub fn class_tag(&self) -> ClassTag {
        match &self.objective {
            Objective::L2Quadratic { .. } => ClassTag::ConvexQuadratic,
            Objective::Quadratic { .. } if self.convex => ClassTag::ConvexQuadratic,
            Objective::Quadratic { .. } | Objective::Rosenbrock => ClassTag::Smooth,
            Objective::MaxAffine { .. } => ClassTag::MaxOfSmooth,
            Objective::L1Composite { .. } => ClassTag::L1Composite,
        }
    }

    /// True when every descriptor is a singleton (the gradient).
    pub fn is_smooth(&self) -> bool {
        matches!(
            self.class_tag(),
            ClassTag::Smooth | ClassTag::ConvexQuadratic
        )
    }

    /// Quadratic data `(A, b, c)` when the objective is a quadratic.
    pub fn quadratic_parts(&self) -> Option<(Matrix, Vector, f64)> {
        match &self.objective {
            Objective::L2Quadratic { y } => {
                Some((Matrix::identity(self.dim).ok()?, y.clone(), 3.0))
            }
            Objective::Quadratic { a, b, c } => Some((a.clone(), b.clone(), *c)),
            _ => None,
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(self.value(x.as_slice()))
    }

    /// Objective value on a raw slice of length `dim`. May be non-finite if
    /// the arithmetic overflows.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::L2Quadratic { y } => {
                0.5 * dot_slices(x, x) - dot_slices(x, y.as_slice()) + 3.0
            }
            Objective::Quadratic { a, b, c } => {
                0.5 * a.quadratic_form(x) - dot_slices(b.as_slice(), x) + c
            }
            Objective::MaxAffine { pieces, weight } => {
                let m = pieces
                    .iter()
                    .map(|p| dot_slices(p.a.as_slice(), x) + p.b)
                    .fold(f64::NEG_INFINITY, f64::max);
                m + 0.5 * weight * dot_slices(x, x)
            }
            Objective::L1Composite { lambda, a, b } => {
                lambda * x.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * a.quadratic_form(x)
                    - dot_slices(b.as_slice(), x)
            }
            Objective::Rosenbrock => {
                let (x1, x2) = (x[0], x[1]);
                (1.0 - x1).powi(2) + 100.0 * (x2 - x1 * x1).powi(2)
            }
        }
    }

    /// Gradient of a smooth objective.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.check(x)?;
        let xs = x.as_slice();
        match &self.objective {
            Objective::L2Quadratic { y } => x.sub(y),
            Objective::Quadratic { a, b, .. } => a.mul_vec(x)?.sub(b),
            Objective::Rosenbrock => {
                let (x1, x2) = (xs[0], xs[1]);
                let r = x2 - x1 * x1;
                Vector::new(vec![-2.0 * (1.0 - x1) - 400.0 * x1 * r, 200.0 * r])
            }
            Objective::MaxAffine { .. } | Objective::L1Composite { .. } => {
                Err(Error::NotSmooth(self.id.clone()))
            }
        }
    }

    /// Indices of the max-affine pieces active at `x` within [`ACTIVITY_TOL`].
    pub fn active_pieces(&self, x: &Vector) -> Result<Vec<usize>> {
        self.check(x)?;
        let Objective::MaxAffine { pieces, .. } = &self.objective else {
            return Ok(Vec::new());
        };
        let vals: Vec<f64> = pieces
            .iter()
            .map(|p| dot_slices(p.a.as_slice(), x.as_slice()) + p.b)
            .collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = ACTIVITY_TOL * (1.0 + m.abs());
        Ok((0..vals.len()).filter(|&i| m - vals[i] <= tol).collect())
    }

    pub fn prox_subdifferential(&self, x: &Vector) -> Result<SubdifferentialDescriptor> {
        self.check(x)?;
        match &self.objective {
            Objective::L2Quadratic { .. } | Objective::Quadratic { .. } | Objective::Rosenbrock => {
                Ok(SubdifferentialDescriptor::Singleton(self.gradient(x)?))
            }
            Objective::MaxAffine { pieces, weight } => {
                let mut gens = self
                    .active_pieces(x)?
                    .into_iter()
                    .map(|i| x.axpy(*weight, &pieces[i].a))
                    .collect::<Result<Vec<_>>>()?;
                if gens.len() == 1 {
                    Ok(SubdifferentialDescriptor::Singleton(gens.pop().unwrap()))
                } else {
                    Ok(SubdifferentialDescriptor::FiniteHull(gens))
                }
            }
            Objective::L1Composite { lambda, a, b } => {
                let smooth = a.mul_vec(x)?.sub(b)?;
                let scale = 1.0 + x.norm_inf();
                let intervals = x
                    .iter()
                    .map(|&xi| {
                        if xi.abs() <= KINK_TOL * scale {
                            Interval {
                                lo: -lambda,
                                hi: *lambda,
                            }
                        } else {
                            Interval::point(lambda * xi.signum())
                        }
                    })
                    .collect();
                Ok(SubdifferentialDescriptor::BoxProduct { smooth, intervals })
            }
        }
    }

    /// Subdifferential and the element chosen by `rule`, in one call.
    pub fn subgradient(&self, x: &Vector, rule: SelectionRule) -> Result<Vector> {
        select_subgradient(&self.prox_subdifferential(x)?, rule)
    }
}

fn is_psd(a: &Matrix) -> bool {
    let hi = lambda_max(a, 17);
    let lo = lambda_min(a, hi.value, 17);
    lo.value >= -1e-12 * (1.0 + hi.value.abs())
}
