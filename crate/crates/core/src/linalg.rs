//! Small dense symmetric matrices: products, extreme eigenvalues by power
//! iteration, and conjugate-gradient solves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{dot_slices, Vector};

/// Square matrix stored row-major. Serialized as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyVector);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFiniteEntry { index, value });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let n = d.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
    }

    pub fn scaled_identity(n: usize, s: f64) -> Result<Self> {
        Self::diag(&vec![s; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (0..i).all(|j| {
                let (a, b) = (self.get(i, j), self.get(j, i));
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            })
        })
    }

    /// `A x` on raw slices; `x.len()` must equal `dim`.
    pub(crate) fn mul_slice(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot_slices(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        self.check(x)?;
        let mut out = vec![0.0; self.n];
        self.mul_slice(x.as_slice(), &mut out);
        Vector::new(out)
    }

    /// `<y, A y>`.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        (0..self.n).map(|i| y[i] * dot_slices(self.row(i), y)).sum()
    }

    /// Gershgorin bound on the spectral radius (max absolute row sum).
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: x.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.rows()
    }
}

/// Eigenvalue estimate with the unit vector that produced it.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub value: f64,
    pub vector: Vec<f64>,
}

const POWER_MAX_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-15;

/// Dominant eigenpair of the positive semidefinite operator `x -> shift*x + sign*A x`
/// by power iteration with a Rayleigh-quotient stopping rule.
fn power_iteration(a: &Matrix, shift: f64, sign: f64, seed: u64) -> EigenEstimate {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut x);
    let mut ax = vec![0.0; n];
    let mut rq = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        a.mul_slice(&x, &mut ax);
        let y: Vec<f64> = x
            .iter()
            .zip(&ax)
            .map(|(xi, ai)| shift * xi + sign * ai)
            .collect();
        let next_rq = dot_slices(&x, &y);
        let ny = dot_slices(&y, &y).sqrt();
        if ny == 0.0 {
            break;
        }
        let converged = (next_rq - rq).abs() <= POWER_TOL * (1.0 + next_rq.abs());
        rq = next_rq;
        x = y.into_iter().map(|v| v / ny).collect();
        if converged {
            break;
        }
    }
    // Report the Rayleigh quotient of A itself at the final vector.
    let value = a.quadratic_form(&x);
    EigenEstimate { value, vector: x }
}

fn normalize(x: &mut [f64]) {
    let n = dot_slices(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    } else if let Some(first) = x.first_mut() {
        *first = 1.0;
    }
}

/// Largest eigenvalue of symmetric `a`, via power iteration on `A + sI`
/// where `s` is a Gershgorin bound making the operator PSD.
pub fn lambda_max(a: &Matrix, seed: u64) -> EigenEstimate {
    let s = a.gershgorin_radius();
    power_iteration(a, s, 1.0, seed)
}

/// Smallest eigenvalue of symmetric `a`, via power iteration on `sigma I - A`
/// with `sigma = lambda_max + 1`. No linear solves.
pub fn lambda_min(a: &Matrix, lambda_max_estimate: f64, seed: u64) -> EigenEstimate {
    // sigma must dominate the whole spectrum so the operator is PSD.
    let sigma = lambda_max_estimate.max(a.gershgorin_radius()) + 1.0;
    power_iteration(a, sigma, -1.0, seed.wrapping_add(1))
}

/// Solves `A x = b` for symmetric positive-definite `a` by conjugate gradients
/// to the given absolute residual.
pub fn conjugate_gradient(a: &Matrix, b: &Vector, tol: f64) -> Result<Vector> {
    a.check(b)?;
    let n = a.dim();
    let mut x = vec![0.0; n];
    let mut r = b.as_slice().to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot_slices(&r, &r);
    let max_iters = 10 * n + 100;
    for _ in 0..max_iters {
        if rr.sqrt() <= tol {
            return Vector::new(x);
        }
        a.mul_slice(&p, &mut ap);
        let pap = dot_slices(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularMatrix);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot_slices(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let mut res = vec![0.0; n];
    a.mul_slice(&x, &mut res);
    let true_res = res
        .iter()
        .zip(b.as_slice())
        .map(|(ax, bi)| (bi - ax).powi(2))
        .sum::<f64>()
        .sqrt();
    if true_res <= tol {
        Vector::new(x)
    } else {
        Err(Error::SingularMatrix)
    }
}
