//! Exact one-dimensional minimization of `phi(t) = f(x + t u)` over `t >= 0`.
//!
//! The search brackets a minimizer by geometric expansion, refines it with
//! golden-section search, then tries a three-point parabolic polish around
//! the golden-section point. The polish makes quadratic rays exact to
//! rounding, which value comparisons alone cannot do. For objectives that are
//! smooth but nonconvex, a log-spaced grid scan over `[0, t_max]` replaces the
//! bracketing step so that a far-away ray minimum is not missed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ClassTag, ObjectiveOracle};
use crate::vector::Vector;

/// 1/phi where phi is the golden ratio.
pub const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// First probe of the geometric bracketing.
const INITIAL_STEP: f64 = 1.0;
/// Points in the nonconvex pre-scan grid.
pub const SCAN_POINTS: usize = 64;
/// The scan grid spans `[t_max * SCAN_SPAN, t_max]` on a log scale.
const SCAN_SPAN: f64 = 1e-10;
/// Relative rounding slack within which two objective values are
/// indistinguishable.
const NOISE_ULPS: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchStatus {
    Interior,
    AtZero,
    AtBracketCap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub t_star: f64,
    pub f_at_t_star: f64,
    pub evaluations: u64,
    pub status: LineSearchStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// The expansion hit `t_max` while still descending.
    pub at_cap: bool,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    f: f64,
}

fn finite(t: f64, f: f64) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteValue { t })
    }
}

/// Brackets a local minimizer of `phi` inside `[0, t_max]` by doubling from
/// an initial step of `min(1, t_max)`.
pub fn bracket_minimum<F: FnMut(f64) -> f64>(mut phi: F, t_max: f64) -> Result<Bracket> {
    let (bracket, _) = bracket_core(&mut phi, t_max)?;
    Ok(bracket)
}

fn bracket_core<F: FnMut(f64) -> f64>(phi: &mut F, t_max: f64) -> Result<(Bracket, Sample)> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let f0 = finite(0.0, phi(0.0))?;
    let t1 = INITIAL_STEP.min(t_max);
    let f1 = finite(t1, phi(t1))?;
    if !(f1 < f0) {
        return Ok((
            Bracket {
                lo: 0.0,
                hi: t1,
                at_cap: false,
            },
            Sample { t: 0.0, f: f0 },
        ));
    }
    let (mut prev, mut cur, mut fcur) = (0.0, t1, f1);
    loop {
        if cur >= t_max {
            return Ok((
                Bracket {
                    lo: prev,
                    hi: t_max,
                    at_cap: true,
                },
                Sample { t: cur, f: fcur },
            ));
        }
        let next = (2.0 * cur).min(t_max);
        let fnext = finite(next, phi(next))?;
        if !(fnext < fcur) {
            return Ok((
                Bracket {
                    lo: prev,
                    hi: next,
                    at_cap: false,
                },
                Sample { t: cur, f: fcur },
            ));
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
}

/// Golden-section search on `[lo, hi]`.
///
/// For unimodal `phi` the result is within `tol_t` of the minimizer. In all
/// cases it is the best point evaluated, endpoints included, so
/// `phi(result) <= min(phi(lo), phi(hi))`. NaN values never win a comparison.
pub fn golden_section<F: FnMut(f64) -> f64>(mut phi: F, lo: f64, hi: f64, tol_t: f64) -> f64 {
    golden_core(&mut phi, lo, hi, tol_t).t
}

/// Interior evaluations allowed on a bracket of width `width`: the iteration
/// count of a 0.618 contraction down to `tol_t`, and never fewer than the two
/// initial probes.
fn interior_budget(width: f64, tol_t: f64) -> usize {
    let k = ((width / tol_t).ln() / (1.0 / 0.618f64).ln()).ceil();
    if k.is_finite() {
        (k.max(2.0)) as usize
    } else {
        usize::MAX
    }
}

fn golden_core<F: FnMut(f64) -> f64>(phi: &mut F, lo: f64, hi: f64, tol_t: f64) -> Sample {
    let mut best = Sample { t: lo, f: phi(lo) };
    let consider = |s: Sample, best: &mut Sample| {
        if s.f < best.f || best.f.is_nan() {
            *best = s;
        }
    };
    if !(hi > lo) {
        return best;
    }
    consider(Sample { t: hi, f: phi(hi) }, &mut best);

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    consider(Sample { t: c, f: fc }, &mut best);
    consider(Sample { t: d, f: fd }, &mut best);
    let budget = interior_budget(hi - lo, tol_t);
    let mut interior = 2;

    while INV_GOLDEN * (b - a) > tol_t && interior < budget {
        let resolution = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if b - a <= resolution {
            break;
        }
        // NaN at d counts as larger, NaN at c as larger too.
        let keep_left = fc < fd || (fd.is_nan() && !fc.is_nan());
        if keep_left {
            b = d;
            d = c;
            fd = fc;
            if INV_GOLDEN * (b - a) <= tol_t {
                break;
            }
            c = b - INV_GOLDEN * (b - a);
            fc = phi(c);
            interior += 1;
            consider(Sample { t: c, f: fc }, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            if INV_GOLDEN * (b - a) <= tol_t {
                break;
            }
            d = a + INV_GOLDEN * (b - a);
            fd = phi(d);
            interior += 1;
            consider(Sample { t: d, f: fd }, &mut best);
        }
    }
    best
}

/// Evaluates `f` along the ray `x + t u` without allocating.
struct Ray<'a> {
    oracle: &'a ObjectiveOracle,
    x: &'a [f64],
    u: &'a [f64],
    buf: Vec<f64>,
    evals: u64,
}

impl<'a> Ray<'a> {
    fn new(oracle: &'a ObjectiveOracle, x: &'a Vector, u: &'a Vector) -> Self {
        Self {
            oracle,
            x: x.as_slice(),
            u: u.as_slice(),
            buf: vec![0.0; x.dim()],
            evals: 0,
        }
    }

    fn phi(&mut self, t: f64) -> f64 {
        for ((b, x), u) in self.buf.iter_mut().zip(self.x).zip(self.u) {
            *b = x + t * u;
        }
        self.evals += 1;
        self.oracle.value(&self.buf)
    }
}

/// The point `x + t u`, computed with the same arithmetic the line search
/// uses to evaluate `phi(t)`.
pub fn ray_point(x: &Vector, u: &Vector, t: f64) -> Result<Vector> {
    x.check_dim(u)?;
    Vector::new(x.iter().zip(u.iter()).map(|(x, u)| x + t * u).collect())
}

/// Approximates `argmin_{t in [0, t_max]} f(x + t u)`; never returns a step
/// that increases `f` beyond rounding.
pub fn exact_line_search(
    oracle: &ObjectiveOracle,
    x: &Vector,
    u: &Vector,
    t_max: f64,
    tol_t: f64,
) -> Result<LineSearchResult> {
    if x.dim() != oracle.dim() {
        return Err(Error::Dimension {
            expected: oracle.dim(),
            found: x.dim(),
        });
    }
    x.check_dim(u)?;
    let un = u.norm();
    if (un - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm: un });
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if !(tol_t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol_t must be positive, got {tol_t}"
        )));
    }

    let mut ray = Ray::new(oracle, x, u);
    let f0 = finite(0.0, ray.phi(0.0))?;
    let mut candidates = vec![Sample { t: 0.0, f: f0 }];
    let mut non_finite: Option<f64> = None;
    let mut phi = |t: f64| {
        let f = ray.phi(t);
        if !f.is_finite() && non_finite.is_none() {
            non_finite = Some(t);
        }
        f
    };

    let scan = oracle.class_tag() == ClassTag::Smooth && !oracle.convex();
    let (lo, hi, at_cap) = if scan {
        let grid: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| {
                t_max * SCAN_SPAN.powf((SCAN_POINTS - 1 - i) as f64 / (SCAN_POINTS - 1) as f64)
            })
            .collect();
        let values: Vec<f64> = grid.iter().map(|&t| phi(t)).collect();
        // index 0 stands for t = 0, grid point i for index i + 1
        let mut best = 0usize;
        let mut best_f = f0;
        for (i, &f) in values.iter().enumerate() {
            if f < best_f {
                best = i + 1;
                best_f = f;
            }
        }
        if best > 0 {
            candidates.push(Sample {
                t: grid[best - 1],
                f: best_f,
            });
        }
        let lo = if best <= 1 { 0.0 } else { grid[best - 2] };
        let hi = if best == 0 {
            grid[0]
        } else if best == SCAN_POINTS {
            t_max
        } else {
            grid[best]
        };
        (lo, hi, best == SCAN_POINTS)
    } else {
        let (bracket, probe) = bracket_core(&mut phi, t_max)?;
        candidates.push(probe);
        (bracket.lo, bracket.hi, bracket.at_cap)
    };

    let golden = golden_core(&mut phi, lo, hi, tol_t);
    candidates.push(golden);

    let best = candidates
        .iter()
        .copied()
        .fold(candidates[0], |b, s| if s.f < b.f { s } else { b });
    let noise = NOISE_ULPS * (1.0 + best.f.abs().max(f0.abs()));
    let mut chosen = best;
    if let Some(p) = parabolic_polish(&mut phi, golden, t_max) {
        // Accept the polished point unless it is measurably worse.
        if p.t > 0.0 && p.f <= best.f + noise {
            chosen = p;
        }
    }
    if let Some(t) = non_finite {
        return Err(Error::NonFiniteValue { t });
    }

    let evaluations = ray.evals;
    if chosen.t <= 0.0 || chosen.f > f0 + noise {
        return Ok(LineSearchResult {
            t_star: 0.0,
            f_at_t_star: f0,
            evaluations,
            status: LineSearchStatus::AtZero,
        });
    }
    let status = if at_cap && t_max - chosen.t <= tol_t {
        LineSearchStatus::AtBracketCap
    } else {
        LineSearchStatus::Interior
    };
    Ok(LineSearchResult {
        t_star: chosen.t,
        f_at_t_star: chosen.f,
        evaluations,
        status,
    })
}

/// Vertex of the parabola through `t - h, t, t + h`, evaluated. Returns the
/// best admissible point among the two side nodes and the vertex, or `None`
/// when the local fit is not convex.
fn parabolic_polish<F: FnMut(f64) -> f64>(
    phi: &mut F,
    center: Sample,
    t_max: f64,
) -> Option<Sample> {
    let h = (1e-3 * center.t).max(1e-4).min(t_max);
    let (tm, tp) = (center.t - h, center.t + h);
    let (fm, fp) = (phi(tm), phi(tp));
    let admissible = |t: f64| (0.0..=t_max).contains(&t);
    let mut best: Option<Sample> = None;
    let offer = |s: Sample, best: &mut Option<Sample>| {
        if admissible(s.t) && s.f.is_finite() && best.is_none_or(|b| s.f < b.f) {
            *best = Some(s);
        }
    };
    offer(Sample { t: tm, f: fm }, &mut best);
    offer(Sample { t: tp, f: fp }, &mut best);
    let curvature = fp - 2.0 * center.f + fm;
    if curvature > 0.0 {
        let tv = center.t - h * (fp - fm) / (2.0 * curvature);
        if tv.is_finite() && (tv - center.t).abs() <= h && admissible(tv) {
            let fv = phi(tv);
            // prefer the vertex over side nodes on ties
            if fv.is_finite() && best.is_none_or(|b| fv <= b.f) {
                best = Some(Sample { t: tv, f: fv });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::AffinePiece;

    fn v(e: &[f64]) -> Vector {
        Vector::from_slice(e).unwrap()
    }

    fn abs_oracle() -> ObjectiveOracle {
        ObjectiveOracle::max_affine(
            "abs",
            vec![
                AffinePiece {
                    a: v(&[1.0]),
                    b: 0.0,
                },
                AffinePiece {
                    a: v(&[-1.0]),
                    b: 0.0,
                },
            ],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_ray() {
        // phi(t) = t^2/2 - 3t + 3, minimized at t = 3
        let o = ObjectiveOracle::l2_quadratic(v(&[1.0, 2.0, 2.0]));
        let u = v(&[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        let r = exact_line_search(&o, &v(&[0.0, 0.0, 0.0]), &u, 100.0, 1e-8).unwrap();
        assert!((r.t_star - 3.0).abs() <= 1e-8, "{}", r.t_star);
        assert!((r.f_at_t_star + 1.5).abs() <= 1e-12);
        assert_eq!(r.status, LineSearchStatus::Interior);
    }

    #[test]
    fn kinked_ray() {
        let r = exact_line_search(&abs_oracle(), &v(&[2.0]), &v(&[-1.0]), 100.0, 1e-8).unwrap();
        assert!((r.t_star - 2.0).abs() <= 1e-8);
        assert!(r.f_at_t_star.abs() <= 1e-8);
    }

    #[test]
    fn ascent_direction_gives_at_zero() {
        let r = exact_line_search(&abs_oracle(), &v(&[2.0]), &v(&[1.0]), 100.0, 1e-10).unwrap();
        assert_eq!(r.t_star, 0.0);
        assert_eq!(r.f_at_t_star, 2.0);
        assert_eq!(r.status, LineSearchStatus::AtZero);
    }

    #[test]
    fn rejects_bad_inputs() {
        let o = abs_oracle();
        assert!(matches!(
            exact_line_search(&o, &v(&[2.0]), &v(&[2.0]), 100.0, 1e-10),
            Err(Error::NonUnitDirection { .. })
        ));
        assert!(exact_line_search(&o, &v(&[2.0]), &v(&[1.0]), 0.0, 1e-10).is_err());
        assert!(exact_line_search(&o, &v(&[2.0]), &v(&[1.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn bracket_cases() {
        let b = bracket_minimum(|t| (t - 3.0).powi(2), 1000.0).unwrap();
        assert!(b.lo <= 3.0 && 3.0 <= b.hi && !b.at_cap);
        let b = bracket_minimum(|t| t, 1000.0).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 1.0));
        let b = bracket_minimum(|t| -t, 100.0).unwrap();
        assert_eq!((b.lo, b.hi, b.at_cap), (64.0, 100.0, true));
        assert!(matches!(
            bracket_minimum(|_| f64::NAN, 10.0),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn golden_cases() {
        assert!((golden_section(|t| (t - 3.0).powi(2), 0.0, 10.0, 1e-8) - 3.0).abs() <= 1e-8);
        assert!((golden_section(|t| (t - 2.0).abs(), 0.0, 10.0, 1e-8) - 2.0).abs() <= 1e-8);
        let t = golden_section(|_| 7.0, 0.0, 10.0, 1e-8);
        assert!((0.0..=10.0).contains(&t));
    }

    #[test]
    fn golden_never_worse_than_endpoints() {
        // two wells; not unimodal
        let phi = |t: f64| (t * 3.0).sin() + 0.1 * t;
        let t = golden_section(phi, 0.0, 10.0, 1e-10);
        assert!(phi(t) <= phi(0.0).min(phi(10.0)));
    }

    #[test]
    fn unbounded_ray_reports_cap() {
        let o = ObjectiveOracle::max_affine(
            "lin",
            vec![AffinePiece {
                a: v(&[1.0]),
                b: 0.0,
            }],
            0.0,
        )
        .unwrap();
        let r = exact_line_search(&o, &v(&[0.0]), &v(&[-1.0]), 50.0, 1e-10).unwrap();
        assert_eq!(r.status, LineSearchStatus::AtBracketCap);
        assert_eq!(r.t_star, 50.0);
    }

    #[test]
    fn nonconvex_scan_finds_far_minimum() {
        // Rosenbrock from (-1.2, 1) along the normalized negative gradient
        let o = ObjectiveOracle::rosenbrock();
        let x = v(&[-1.2, 1.0]);
        let g = o.gradient(&x).unwrap();
        let u = g.scale(-1.0 / g.norm()).unwrap();
        let r = exact_line_search(&o, &x, &u, 1e3, 1e-12).unwrap();
        // brute-force the ray on a fine grid over [0, 3]
        let brute = (0..=300_000)
            .map(|k| o.value(ray_point(&x, &u, k as f64 * 1e-5).unwrap().as_slice()))
            .fold(f64::INFINITY, f64::min);
        assert!(
            r.f_at_t_star <= brute + 1e-9,
            "{} vs {}",
            r.f_at_t_star,
            brute
        );
    }
}
