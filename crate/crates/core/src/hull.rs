//! Minimum-norm point of the convex hull of finitely many vectors
//! (projection of the origin onto the hull) by Wolfe's algorithm.

use crate::error::{Error, Result};
use crate::vector::{dot_slices, Vector};

/// Default stopping tolerance on the Wolfe gap.
pub const DEFAULT_HULL_TOL: f64 = 1e-10;

const MAX_MAJOR_ITERS: usize = 1000;
const WEIGHT_EPS: f64 = 1e-14;

/// Returns the point of `conv(generators)` closest to the origin, with
/// convex weights over the generators.
///
/// On exit `|p| <= |q| + tol` for every `q` in the hull, up to the accuracy
/// with which the Wolfe gap can be evaluated in floating point.
pub fn min_norm_in_hull(generators: &[Vector], tol: f64) -> Result<Vector> {
    min_norm_weights(generators, tol).map(|(p, _)| p)
}

/// Like [`min_norm_in_hull`] but also returns the convex weights.
pub fn min_norm_weights(generators: &[Vector], tol: f64) -> Result<(Vector, Vec<f64>)> {
    let first = generators.first().ok_or(Error::EmptyHull)?;
    let dim = first.dim();
    for g in generators {
        first.check_dim(g)?;
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hull tolerance must be positive, got {tol}"
        )));
    }
    let pts: Vec<&[f64]> = generators.iter().map(|g| g.as_slice()).collect();

    // Start from the generator of least norm.
    let start = (0..pts.len())
        .min_by(|&i, &j| dot_slices(pts[i], pts[i]).total_cmp(&dot_slices(pts[j], pts[j])))
        .unwrap();
    let mut active = vec![start];
    let mut lambda = vec![1.0];
    let mut x = pts[start].to_vec();

    for _ in 0..MAX_MAJOR_ITERS {
        let xx = dot_slices(&x, &x);
        let xnorm = xx.sqrt();
        if xnorm <= tol {
            break;
        }
        let (j, xpj) = (0..pts.len())
            .map(|i| (i, dot_slices(&x, pts[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        // Wolfe gap bounds |x|^2 - <x, q> for every q in the hull.
        if xx - xpj <= tol * xnorm || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);

        // Minor cycle: move toward the affine minimizer of the active set,
        // dropping generators whose weight hits zero.
        let mut first_minor = true;
        let mut degenerate = false;
        loop {
            let Some(alpha) = affine_minimizer(&pts, &active) else {
                degenerate = first_minor;
                break;
            };
            first_minor = false;
            if alpha.iter().all(|&a| a > WEIGHT_EPS) {
                lambda = alpha;
                x = combine(&pts, &active, &lambda, dim);
                break;
            }
            let theta = lambda
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= WEIGHT_EPS)
                .map(|(&l, &a)| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                .fold(1.0_f64, f64::min)
                .clamp(0.0, 1.0);
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let mut k = 0;
            while k < active.len() {
                if lambda[k] <= WEIGHT_EPS {
                    active.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            x = combine(&pts, &active, &lambda, dim);
            if active.len() == 1 {
                break;
            }
        }
        if degenerate {
            // new generator is affinely dependent on the active set
            active.pop();
            lambda.pop();
            break;
        }
    }

    let mut weights = vec![0.0; pts.len()];
    for (&i, &l) in active.iter().zip(&lambda) {
        weights[i] += l;
    }
    Ok((Vector::new(x)?, weights))
}

fn combine(pts: &[&[f64]], active: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &l) in active.iter().zip(lambda) {
        for (xk, pk) in x.iter_mut().zip(pts[i]) {
            *xk += l * pk;
        }
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of the active set:
/// solves `[G 1; 1^T 0] [alpha; mu] = [0; 1]` with `G` the Gram matrix.
fn affine_minimizer(pts: &[&[f64]], active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    let n = k + 1;
    let mut m = vec![0.0; n * (n + 1)];
    let w = n + 1;
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            m[r * w + c] = dot_slices(pts[i], pts[j]);
        }
        m[r * w + k] = 1.0;
        m[k * w + r] = 1.0;
    }
    m[k * w + n] = 1.0;
    let sol = solve_augmented(&mut m, n)?;
    Some(sol[..k].to_vec())
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` augmented matrix.
fn solve_augmented(m: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let w = n + 1;
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[piv * w + col].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for c in 0..w {
                m.swap(piv * w + c, col * w + c);
            }
        }
        for r in 0..n {
            if r != col {
                let f = m[r * w + col] / m[col * w + col];
                if f != 0.0 {
                    for c in col..w {
                        m[r * w + c] -= f * m[col * w + c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|r| m[r * w + n] / m[r * w + r]).collect())
}
