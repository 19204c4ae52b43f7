//! Built-in problem corpus. Everything is constructed in code from fixed
//! parameters and seeds, so runs over the corpus are reproducible bit for bit.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{min_norm_in_hull, DEFAULT_HULL_TOL};
use crate::linalg::{conjugate_gradient, lambda_max, lambda_min, Matrix};
use crate::oracle::{AffinePiece, ObjectiveOracle};
use crate::vector::Vector;

/// Seed for the power iterations behind declared eigenvalue bounds.
const EIGEN_SEED: u64 = 0x5eed;
/// Radii of declared level-set balls are inflated by this factor to absorb
/// rounding.
const RADIUS_INFLATION: f64 = 1.0 + 1e-9;

/// A ball known to contain the level set `{f <= f(x0)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetBall {
    pub center: Vector,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub id: String,
    pub oracle: ObjectiveOracle,
    pub x0: Vector,
    /// Known constants: `delta`, `L`, `m`, `M`. `L` is present only when the
    /// subdifferential is Lipschitz with that constant on the whole space.
    pub declared: BTreeMap<String, f64>,
    /// `Some` when the level set of `x0` is known to be bounded.
    pub level_set: Option<LevelSetBall>,
}

impl ProblemSpec {
    fn new(oracle: ObjectiveOracle, x0: Vector) -> Result<Self> {
        x0.check_dim(&Vector::zeros(oracle.dim())?)?;
        if !oracle.eval(&x0)?.is_finite() {
            return Err(Error::InvalidStart);
        }
        let mut declared = BTreeMap::new();
        declared.insert("delta".to_string(), 1.0);
        Ok(Self {
            id: oracle.id().to_string(),
            oracle,
            x0,
            declared,
            level_set: None,
        })
    }

    fn declare(mut self, name: &str, value: f64) -> Self {
        self.declared.insert(name.to_string(), value);
        self
    }

    /// Renames the problem and its oracle.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self.oracle = self.oracle.with_id(self.id.clone());
        self
    }

    pub fn declared(&self, name: &str) -> Option<f64> {
        self.declared.get(name).copied()
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.declared("L")
    }

    pub fn delta(&self) -> f64 {
        self.declared("delta").unwrap_or(1.0)
    }

    pub fn expected(&self) -> Option<(&Vector, f64)> {
        Some((
            self.oracle.known_minimizer()?,
            self.oracle.known_min_value()?,
        ))
    }

    pub fn is_convex(&self) -> bool {
        self.oracle.convex()
    }

    pub fn has_bounded_level_set(&self) -> bool {
        self.level_set.is_some()
    }

    /// Same problem started from `x0 + s g`, `g` standard normal from `seed`
    /// and `s = max(1, |x0|)`. The level-set ball is dropped unless it can be
    /// recomputed for the new start.
    pub fn with_random_start(&self, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = self.x0.norm().max(1.0);
        let x0: Vec<f64> = self
            .x0
            .iter()
            .map(|xi| {
                let g: f64 = StandardNormal.sample(&mut rng);
                xi + s * g
            })
            .collect();
        let mut out = self.clone();
        out.x0 = Vector::new(x0)?;
        out.level_set = level_set_ball(&out.oracle, &out.x0, out.declared("m"))?;
        Ok(out)
    }
}

/// Ball containing `{f <= f(x0)}` from a strong-convexity or growth bound,
/// when one is available for the objective class.
fn level_set_ball(
    oracle: &ObjectiveOracle,
    x0: &Vector,
    m: Option<f64>,
) -> Result<Option<LevelSetBall>> {
    use crate::oracle::Objective;
    let f0 = oracle.eval(x0)?;
    let ball = |center: Vector, r2: f64| {
        Some(LevelSetBall {
            center,
            radius: r2.max(0.0).sqrt() * RADIUS_INFLATION,
        })
    };
    Ok(match oracle.objective() {
        Objective::L2Quadratic { .. } | Objective::Quadratic { .. } => {
            match (m, oracle.known_minimizer(), oracle.known_min_value()) {
                // f - f* >= m/2 |x - x*|^2
                (Some(m), Some(xs), Some(fs)) if m > 0.0 => ball(xs.clone(), 2.0 * (f0 - fs) / m),
                _ => None,
            }
        }
        Objective::MaxAffine { pieces, weight } if *weight > 0.0 => {
            // f >= <a_1, x> + b_1 + w/2 |x|^2 = w/2 |x + a_1/w|^2 + b_1 - |a_1|^2/(2w)
            let p = &pieces[0];
            let aa = p.a.dot(&p.a)?;
            ball(
                p.a.scale(-1.0 / weight)?,
                2.0 * (f0 - p.b + aa / (2.0 * weight)) / weight,
            )
        }
        Objective::MaxAffine { pieces, .. } if oracle.dim() == 1 => {
            // f >= gamma |x| + min b_i with gamma the smaller one-sided slope
            let hi = pieces
                .iter()
                .map(|p| p.a[0])
                .fold(f64::NEG_INFINITY, f64::max);
            let lo = pieces.iter().map(|p| p.a[0]).fold(f64::INFINITY, f64::min);
            let gamma = hi.min(-lo);
            let bmin = pieces.iter().map(|p| p.b).fold(f64::INFINITY, f64::min);
            if gamma > 0.0 {
                let r = (f0 - bmin) / gamma;
                ball(Vector::zeros(1)?, r * r)
            } else {
                None
            }
        }
        Objective::L1Composite { b, .. } => match m {
            // f >= m/2 |x|^2 - <b, x> = m/2 |x - b/m|^2 - |b|^2/(2m)
            Some(m) if m > 0.0 => {
                let bb = b.dot(b)?;
                ball(b.scale(1.0 / m)?, 2.0 * (f0 + bb / (2.0 * m)) / m)
            }
            _ => None,
        },
        _ => None,
    })
}

fn finish(spec: ProblemSpec) -> Result<ProblemSpec> {
    let ball = level_set_ball(&spec.oracle, &spec.x0, spec.declared("m"))?;
    Ok(ProblemSpec {
        level_set: ball,
        ..spec
    })
}

/// `1/2 |x|^2 - <x, y> + 3` from `x0 = 0`, with declared `L = 1`.
pub fn make_l2_quadratic(y: Vector) -> Result<ProblemSpec> {
    let x0 = Vector::zeros(y.dim())?;
    let spec = ProblemSpec::new(ObjectiveOracle::l2_quadratic(y), x0)?
        .declare("L", 1.0)
        .declare("m", 1.0)
        .declare("M", 1.0);
    finish(spec)
}

/// Standard normal `y` of the given dimension drawn from `seed`.
pub fn l2_target(dim: usize, seed: u64) -> Result<Vector> {
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::new((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
}

/// [`make_l2_quadratic`] with `y` from [`l2_target`].
pub fn l2_quadratic_seeded(dim: usize, seed: u64) -> Result<ProblemSpec> {
    Ok(make_l2_quadratic(l2_target(dim, seed)?)?.with_id(format!("l2_quadratic_d{dim}_s{seed}")))
}

/// `1/2 x^T A x - <b, x> + c` with `A` symmetric positive definite. The
/// minimizer comes from conjugate gradients and `m`, `M` from power iteration.
pub fn make_strictly_convex_quadratic(
    a: Matrix,
    b: Vector,
    c: f64,
    x0: Vector,
) -> Result<ProblemSpec> {
    let oracle = ObjectiveOracle::quadratic("quadratic", a.clone(), b.clone(), c)?;
    let xs = conjugate_gradient(&a, &b, 1e-12)?;
    let fs = oracle.eval(&xs)?;
    let big_m = lambda_max(&a, EIGEN_SEED).value;
    let m = lambda_min(&a, big_m, EIGEN_SEED).value;
    let oracle = oracle.with_known_minimum(xs, fs)?;
    let spec = ProblemSpec::new(oracle, x0)?
        .declare("m", m)
        .declare("M", big_m)
        .declare("L", big_m);
    finish(spec)
}

/// `max_i (<a_i, x> + b_i) + (w/2) |x|^2`. A minimizer is recorded when every
/// offset `b_i` is equal: it is then `-p / w` for `p` the minimum-norm point
/// of `conv{a_i}` (or the origin when `w = 0` and `p = 0`).
pub fn make_max_affine(pieces: Vec<AffinePiece>, weight: f64, x0: Vector) -> Result<ProblemSpec> {
    let mut oracle = ObjectiveOracle::max_affine("max_affine", pieces.clone(), weight)?;
    let b0 = pieces[0].b;
    if pieces.iter().all(|p| p.b == b0) {
        let gens: Vec<Vector> = pieces.iter().map(|p| p.a.clone()).collect();
        let p = min_norm_in_hull(&gens, DEFAULT_HULL_TOL)?;
        let xs = if weight > 0.0 {
            Some(p.scale(-1.0 / weight)?)
        } else if p.norm() <= DEFAULT_HULL_TOL {
            Some(Vector::zeros(p.dim())?)
        } else {
            None
        };
        if let Some(xs) = xs {
            let fs = oracle.eval(&xs)?;
            oracle = oracle.with_known_minimum(xs, fs)?;
        }
    }
    let mut spec = ProblemSpec::new(oracle, x0)?;
    if weight > 0.0 {
        spec = spec.declare("m", weight);
        // the subdifferential is only Lipschitz when no kink exists
        if pieces.len() == 1 {
            spec = spec.declare("L", weight);
        }
    }
    finish(spec)
}

/// `lambda |x|_1 + 1/2 x^T A x - <b, x>`. For diagonal positive-definite `A`
/// the minimizer is the coordinatewise soft threshold `S(b_i, lambda) / A_ii`.
pub fn make_l1_composite(lambda: f64, a: Matrix, b: Vector, x0: Vector) -> Result<ProblemSpec> {
    let mut oracle = ObjectiveOracle::l1_composite("l1_composite", lambda, a.clone(), b.clone())?;
    let n = a.dim();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a.get(i, j) == 0.0));
    if diagonal && (0..n).all(|i| a.get(i, i) > 0.0) {
        let xs = Vector::new(
            (0..n)
                .map(|i| {
                    let s = b[i].abs() - lambda;
                    if s > 0.0 {
                        b[i].signum() * s / a.get(i, i)
                    } else {
                        0.0
                    }
                })
                .collect(),
        )?;
        let fs = oracle.eval(&xs)?;
        oracle = oracle.with_known_minimum(xs, fs)?;
    }
    let big_m = lambda_max(&a, EIGEN_SEED).value;
    let m = lambda_min(&a, big_m, EIGEN_SEED).value;
    // no `L`: the subdifferential jumps across every coordinate hyperplane
    let mut spec = ProblemSpec::new(oracle, x0)?.declare("M", big_m);
    if m > 0.0 {
        spec = spec.declare("m", m);
    }
    finish(spec)
}

/// Smooth non-convex test functions; only `"rosenbrock"` is available.
pub fn make_smooth_nonconvex(id: &str, x0: Vector) -> Result<ProblemSpec> {
    match id {
        "rosenbrock" => {
            if x0.dim() != 2 {
                return Err(Error::Dimension {
                    expected: 2,
                    found: x0.dim(),
                });
            }
            ProblemSpec::new(ObjectiveOracle::rosenbrock(), x0)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown smooth test function `{other}`"
        ))),
    }
}

fn v(e: &[f64]) -> Vector {
    Vector::from_slice(e).expect("corpus literals are finite and non-empty")
}

fn piece(a: &[f64], b: f64) -> AffinePiece {
    AffinePiece { a: v(a), b }
}

/// The default corpus, ordered by id.
pub fn default_corpus() -> Result<Vec<ProblemSpec>> {
    let mut corpus = vec![
        l2_quadratic_seeded(10, 7)?,
        make_strictly_convex_quadratic(
            Matrix::diag(&[1.0, 4.0])?,
            v(&[0.0, 0.0]),
            0.0,
            v(&[2.0, 1.0]),
        )?
        .with_id("quadratic_diag_1_4"),
        make_strictly_convex_quadratic(
            Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]])?,
            v(&[3.0, 3.0]),
            0.0,
            v(&[0.0, 0.0]),
        )?
        .with_id("quadratic_coupled"),
        make_strictly_convex_quadratic(Matrix::identity(2)?, v(&[1.0, 0.0]), 0.0, v(&[0.0, 0.0]))?
            .with_id("quadratic_identity"),
        make_max_affine(
            vec![piece(&[1.0], 0.0), piece(&[-1.0], 0.0)],
            0.0,
            v(&[2.0]),
        )?
        .with_id("max_affine_abs"),
        make_max_affine(
            vec![
                piece(&[1.0, 0.0], 0.0),
                piece(&[0.0, 1.0], 0.0),
                piece(&[-1.0, -1.0], 0.0),
            ],
            1.0,
            v(&[1.5, 0.5]),
        )?
        .with_id("max_affine_triangle"),
        make_max_affine(vec![piece(&[1.0, -2.0], 0.5)], 1.0, v(&[0.0, 0.0]))?
            .with_id("max_affine_single"),
        make_l1_composite(1.0, Matrix::identity(1)?, v(&[2.0]), v(&[0.0]))?.with_id("l1_shrink"),
        make_l1_composite(1.0, Matrix::identity(1)?, v(&[0.5]), v(&[1.0]))?.with_id("l1_zero"),
        make_l1_composite(0.5, Matrix::identity(2)?, v(&[2.0, -2.0]), v(&[0.0, 0.0]))?
            .with_id("l1_pair"),
        make_smooth_nonconvex("rosenbrock", v(&[-1.2, 1.0]))?,
    ];
    corpus.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(corpus)
}

/// A problem as addressed from a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemRequest {
    /// Every entry of [`default_corpus`].
    DefaultCorpus,
    /// One entry of [`default_corpus`] by id.
    Corpus { name: String },
    L2Quadratic {
        #[serde(default = "default_l2_dim")]
        dim: usize,
        #[serde(default = "default_l2_seed")]
        seed: u64,
        /// Explicit target; overrides `dim` and `seed`.
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
        x0: Vec<f64>,
        #[serde(default)]
        name: Option<String>,
    },
    MaxAffine {
        pieces: Vec<AffinePiece>,
        #[serde(default)]
        weight: f64,
        x0: Vec<f64>,
        #[serde(default)]
        name: Option<String>,
    },
    L1Composite {
        lambda: f64,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        x0: Vec<f64>,
        #[serde(default)]
        name: Option<String>,
    },
    Rosenbrock {
        #[serde(default = "default_rosenbrock_start")]
        x0: Vec<f64>,
    },
}

fn default_l2_dim() -> usize {
    10
}

fn default_l2_seed() -> u64 {
    7
}

fn default_rosenbrock_start() -> Vec<f64> {
    vec![-1.2, 1.0]
}

impl ProblemRequest {
    /// Builds the requested problems; `seed` replaces the seed of seeded
    /// families when given.
    pub fn build(&self, seed: Option<u64>) -> Result<Vec<ProblemSpec>> {
        let named = |spec: ProblemSpec, name: &Option<String>| match name {
            Some(n) => spec.with_id(n.clone()),
            None => spec,
        };
        Ok(match self {
            ProblemRequest::DefaultCorpus => default_corpus()?,
            ProblemRequest::Corpus { name } => {
                let found = default_corpus()?.into_iter().find(|p| &p.id == name);
                vec![found.ok_or_else(|| {
                    Error::InvalidParameter(format!("no corpus problem named `{name}`"))
                })?]
            }
            ProblemRequest::L2Quadratic { dim, seed: s, y } => match y {
                Some(y) => vec![make_l2_quadratic(Vector::from_slice(y)?)?],
                None => vec![l2_quadratic_seeded(*dim, seed.unwrap_or(*s))?],
            },
            ProblemRequest::Quadratic { a, b, c, x0, name } => vec![named(
                make_strictly_convex_quadratic(
                    Matrix::from_rows(a.clone())?,
                    Vector::from_slice(b)?,
                    *c,
                    Vector::from_slice(x0)?,
                )?,
                name,
            )],
            ProblemRequest::MaxAffine {
                pieces,
                weight,
                x0,
                name,
            } => {
                vec![named(
                    make_max_affine(pieces.clone(), *weight, Vector::from_slice(x0)?)?,
                    name,
                )]
            }
            ProblemRequest::L1Composite {
                lambda,
                a,
                b,
                x0,
                name,
            } => vec![named(
                make_l1_composite(
                    *lambda,
                    Matrix::from_rows(a.clone())?,
                    Vector::from_slice(b)?,
                    Vector::from_slice(x0)?,
                )?,
                name,
            )],
            ProblemRequest::Rosenbrock { x0 } => vec![make_smooth_nonconvex(
                "rosenbrock",
                Vector::from_slice(x0)?,
            )?],
        })
    }
}
