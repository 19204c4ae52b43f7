//! Sampled certification of the inequalities the convergence theory relies
//! on. Every check is deterministic given its seed and one-sided: a failure
//! comes with a witness that reproduces it, a pass is only evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateKind, Violation};
use crate::error::{Error, Result};
use crate::linalg::{lambda_max, lambda_min};
use crate::oracle::{ObjectiveOracle, SelectionRule, SubdifferentialDescriptor};
use crate::par::{map_ordered, Execution};
use crate::vector::{dot_slices, Vector};

/// Relative slack on function-value inequalities, scaled by `1 + |f|`.
pub const VALUE_SLACK: f64 = 1e-10;
/// Absolute slack on the subdifferential Lipschitz inclusion.
pub const LIPSCHITZ_SLACK: f64 = 1e-10;
/// Random unit probes used by the Hessian bound check.
pub const HESSIAN_PROBES: usize = 1000;

pub const DEFAULT_NUM_POINTS: usize = 2000;
pub const DEFAULT_SEED: u64 = 42;

/// Where and how densely to sample: `num_points` draws from the ball
/// `B(center, radius)`, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub center: Vector,
    pub radius: f64,
    pub num_points: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl SamplingPlan {
    pub fn new(center: Vector, radius: f64, num_points: usize, seed: u64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sampling radius must be positive, got {radius}"
            )));
        }
        if num_points == 0 {
            return Err(Error::InvalidParameter(
                "sampling plan needs at least one point".into(),
            ));
        }
        Ok(Self {
            center,
            radius,
            num_points,
            seed,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Uniform draw from the open ball `B(center, radius)`.
fn sample_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let mut g: Vec<f64> = (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let gn = dot_slices(&g, &g).sqrt();
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    let s = if gn > 0.0 { r / gn } else { 0.0 };
    for (gi, ci) in g.iter_mut().zip(center) {
        *gi = ci + s * *gi;
    }
    g
}

fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = dot_slices(&g, &g).sqrt();
        if n > 0.0 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

fn check_dim(oracle: &ObjectiveOracle, v: &Vector) -> Result<()> {
    if v.dim() != oracle.dim() {
        return Err(Error::Dimension {
            expected: oracle.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Outcome of one sampled inequality `lhs >= rhs - slack`.
struct Probe {
    witness: Vec<Vec<f64>>,
    lhs: f64,
    rhs: f64,
    slack: f64,
    /// Smallest constant that would make this sample pass.
    required: f64,
}

fn collect(kind: CertificateKind, probes: Vec<Probe>, required_name: &str) -> Result<Certificate> {
    let mut cert = Certificate::builder(kind);
    let mut required = 0.0_f64;
    for p in probes {
        cert.samples(1);
        required = required.max(p.required);
        if p.lhs < p.rhs - p.slack {
            cert.violation(Violation {
                witness: p
                    .witness
                    .into_iter()
                    .map(Vector::new)
                    .collect::<Result<_>>()?,
                lhs: p.lhs,
                rhs: p.rhs,
                gap: p.rhs - p.lhs,
                note: String::new(),
            });
        }
    }
    cert.constant(required_name, required);
    Ok(cert.finish())
}

/// Tests `f(y) >= f(x) + <zeta, y - x> - (r/2)|y - x|^2` for `y` sampled in
/// `B(x, radius)`, where `x = plan.center`.
pub fn check_prox_subgradient(
    oracle: &ObjectiveOracle,
    zeta: &Vector,
    r: f64,
    plan: &SamplingPlan,
) -> Result<Certificate> {
    let x = &plan.center;
    check_dim(oracle, x)?;
    check_dim(oracle, zeta)?;
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("r must be >= 0, got {r}")));
    }
    let fx = oracle.eval(x)?;
    let slack = VALUE_SLACK * (1.0 + fx.abs());
    let mut rng = plan.rng();
    let ys: Vec<Vec<f64>> = (0..plan.num_points)
        .map(|_| sample_ball(&mut rng, x.as_slice(), plan.radius))
        .collect();
    let probes = map_ordered(plan.execution, &ys, |y| {
        let d: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let dd = dot_slices(&d, &d);
        let linear = fx + dot_slices(zeta.as_slice(), &d);
        let lhs = oracle.value(y);
        let rhs = linear - 0.5 * r * dd;
        let required = if dd > 0.0 {
            (2.0 * (linear - lhs) / dd).max(0.0)
        } else {
            0.0
        };
        Probe {
            witness: vec![x.as_slice().to_vec(), y.clone()],
            lhs,
            rhs,
            slack,
            required,
        }
    });
    let mut cert = collect(
        CertificateKind::ProxSubgradientMembership,
        probes,
        "r_required",
    )?;
    cert.estimated_constants.insert("r".into(), r);
    cert.estimated_constants
        .insert("radius".into(), plan.radius);
    Ok(cert)
}

/// Tests the local uniform prox-regularity estimate
/// `f(y') >= f(y) + <w, y' - y> - (L/2)|y' - y|^2` for pairs `y, y'` sampled
/// in `B(plan.center, plan.radius)` and `w` the minimum-norm subgradient at `y`.
pub fn check_prox_regularity(
    oracle: &ObjectiveOracle,
    lipschitz: f64,
    plan: &SamplingPlan,
) -> Result<Certificate> {
    check_dim(oracle, &plan.center)?;
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "L must be > 0, got {lipschitz}"
        )));
    }
    let mut rng = plan.rng();
    let c = plan.center.as_slice();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..plan.num_points)
        .map(|_| {
            (
                sample_ball(&mut rng, c, plan.radius),
                sample_ball(&mut rng, c, plan.radius),
            )
        })
        .collect();
    let probes = map_ordered(plan.execution, &pairs, |(y, yp)| -> Result<Probe> {
        let yv = Vector::from_slice(y)?;
        let w = oracle.subgradient(&yv, SelectionRule::MinNorm)?;
        let fy = oracle.value(y);
        let d: Vec<f64> = yp.iter().zip(y).map(|(a, b)| a - b).collect();
        let dd = dot_slices(&d, &d);
        let linear = fy + dot_slices(w.as_slice(), &d);
        let lhs = oracle.value(yp);
        let rhs = linear - 0.5 * lipschitz * dd;
        let required = if dd > 0.0 {
            (2.0 * (linear - lhs) / dd).max(0.0)
        } else {
            0.0
        };
        Ok(Probe {
            witness: vec![y.clone(), yp.clone(), w.into_inner()],
            lhs,
            rhs,
            slack: VALUE_SLACK * (1.0 + fy.abs()),
            required,
        })
    });
    let probes = probes.into_iter().collect::<Result<Vec<_>>>()?;
    let mut cert = collect(CertificateKind::ProxRegularity, probes, "L_required")?;
    cert.estimated_constants.insert("L".into(), lipschitz);
    cert.estimated_constants.insert("delta".into(), plan.radius);
    Ok(cert)
}

/// `sup_{g in d_p f(y)} dist(g, d_p f(z))`, exact for every descriptor form.
pub fn subdiff_excess(oracle: &ObjectiveOracle, y: &Vector, z: &Vector) -> Result<f64> {
    let dy = oracle.prox_subdifferential(y)?;
    let dz = oracle.prox_subdifferential(z)?;
    dy.excess_over(&dz)
}

/// Tests `d_p f(y) ⊂ d_p f(z) + L|y - z| B` for `y` cycling through
/// `omega_samples` and `z` drawn from `B(y, plan.radius)`. `plan.center` is
/// not used here.
pub fn check_subdiff_lipschitz(
    oracle: &ObjectiveOracle,
    omega_samples: &[Vector],
    lipschitz: f64,
    plan: &SamplingPlan,
) -> Result<Certificate> {
    if omega_samples.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one level-set sample".into(),
        ));
    }
    for y in omega_samples {
        check_dim(oracle, y)?;
    }
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "L must be > 0, got {lipschitz}"
        )));
    }
    let mut rng = plan.rng();
    let pairs: Vec<(usize, Vec<f64>)> = (0..plan.num_points)
        .map(|k| {
            let i = k % omega_samples.len();
            (
                i,
                sample_ball(&mut rng, omega_samples[i].as_slice(), plan.radius),
            )
        })
        .collect();
    let probes = map_ordered(plan.execution, &pairs, |(i, z)| -> Result<Probe> {
        let y = &omega_samples[*i];
        let zv = Vector::from_slice(z)?;
        let excess = subdiff_excess(oracle, y, &zv)?;
        let dist = sq_dist(y.as_slice(), z).sqrt();
        // inclusion holds iff excess <= L|y - z|; phrased as lhs >= rhs - slack
        Ok(Probe {
            witness: vec![y.as_slice().to_vec(), z.clone()],
            lhs: lipschitz * dist,
            rhs: excess,
            slack: LIPSCHITZ_SLACK,
            required: if dist > 0.0 { excess / dist } else { 0.0 },
        })
    });
    let probes = probes.into_iter().collect::<Result<Vec<_>>>()?;
    let mut cert = collect(CertificateKind::SubdiffLipschitz, probes, "L_required")?;
    cert.estimated_constants.insert("L".into(), lipschitz);
    cert.estimated_constants.insert("delta".into(), plan.radius);
    Ok(cert)
}

/// Up to `count` points of the level set `{f <= f(x0)}`, drawn from
/// `B(center, radius)` by rejection; `x0` itself is always the first sample.
pub fn level_set_samples(
    oracle: &ObjectiveOracle,
    x0: &Vector,
    center: &Vector,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    check_dim(oracle, x0)?;
    check_dim(oracle, center)?;
    let f0 = oracle.eval(x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![x0.clone()];
    let mut attempts = 0;
    while out.len() < count.max(1) && attempts < 100 * count {
        attempts += 1;
        let y = sample_ball(&mut rng, center.as_slice(), radius);
        if oracle.value(&y) <= f0 {
            out.push(Vector::new(y)?);
        }
    }
    Ok(out)
}

/// Certifies `m <= <y, A y> / |y|^2 <= M` for a quadratic objective with
/// Hessian `A`: power iteration for both extreme eigenvalues plus
/// [`HESSIAN_PROBES`] random Rayleigh quotients.
pub fn check_hessian_bounds(
    oracle: &ObjectiveOracle,
    m: f64,
    big_m: f64,
    seed: u64,
) -> Result<Certificate> {
    let (a, _, _) = oracle
        .quadratic_parts()
        .ok_or_else(|| Error::NotQuadratic(oracle.id().to_string()))?;
    if !(m <= big_m) {
        return Err(Error::InvalidParameter(format!(
            "need m <= M, got m = {m}, M = {big_m}"
        )));
    }
    let hi = lambda_max(&a, seed);
    let lo = lambda_min(&a, hi.value, seed);
    let tol = 1e-9 * (1.0 + hi.value.abs().max(lo.value.abs()));

    let mut cert = Certificate::builder(CertificateKind::HessianBounds);
    let check =
        |y: Vec<f64>, rq: f64, cert: &mut crate::certificate::CertificateBuilder| -> Result<()> {
            cert.samples(1);
            if rq < m - tol {
                cert.violation(Violation {
                    witness: vec![Vector::new(y)?],
                    lhs: rq,
                    rhs: m,
                    gap: m - rq,
                    note: "below m".into(),
                });
            } else if rq > big_m + tol {
                cert.violation(Violation {
                    witness: vec![Vector::new(y)?],
                    lhs: rq,
                    rhs: big_m,
                    gap: rq - big_m,
                    note: "above M".into(),
                });
            }
            Ok(())
        };
    check(lo.vector.clone(), lo.value, &mut cert)?;
    check(hi.vector.clone(), hi.value, &mut cert)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rq_min, mut rq_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..HESSIAN_PROBES {
        let y = random_unit(&mut rng, a.dim());
        let rq = a.quadratic_form(&y);
        rq_min = rq_min.min(rq);
        rq_max = rq_max.max(rq);
        check(y, rq, &mut cert)?;
    }
    cert.constant("m", lo.value)
        .constant("M", hi.value)
        .constant("rayleigh_min", rq_min)
        .constant("rayleigh_max", rq_max);
    Ok(cert.finish())
}

/// Compares a singleton descriptor against central differences with step `h`;
/// passes iff every coordinate deviates by at most `10 h^2 (1 + |f(x)|)`.
pub fn finite_difference_gradient_check(
    oracle: &ObjectiveOracle,
    x: &Vector,
    h: f64,
) -> Result<Certificate> {
    check_dim(oracle, x)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be > 0, got {h}")));
    }
    let g = match oracle.prox_subdifferential(x)? {
        SubdifferentialDescriptor::Singleton(g) => g,
        SubdifferentialDescriptor::FiniteHull(mut gens) if gens.len() == 1 => gens.pop().unwrap(),
        _ => return Err(Error::NotSmoothAt),
    };
    let fx = oracle.eval(x)?;
    let threshold = 10.0 * h * h * (1.0 + fx.abs());
    let mut cert = Certificate::builder(CertificateKind::FiniteDifferenceGradient);
    let mut worst = 0.0_f64;
    let mut xp = x.as_slice().to_vec();
    for i in 0..x.dim() {
        let xi = xp[i];
        xp[i] = xi + h;
        let fp = oracle.value(&xp);
        xp[i] = xi - h;
        let fm = oracle.value(&xp);
        xp[i] = xi;
        let fd = (fp - fm) / (2.0 * h);
        let dev = (fd - g[i]).abs();
        worst = worst.max(dev);
        cert.samples(1);
        if dev > threshold {
            cert.violation(Violation {
                witness: vec![x.clone()],
                lhs: dev,
                rhs: threshold,
                gap: dev - threshold,
                note: format!(
                    "coordinate {i}: central difference {fd}, descriptor {}",
                    g[i]
                ),
            });
        }
    }
    cert.constant("max_abs_deviation", worst)
        .constant("threshold", threshold)
        .constant("h", h);
    Ok(cert.finish())
}
