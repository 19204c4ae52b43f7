//! Reference computations for tests, written without using the library's
//! numerics.

#![allow(dead_code)]

/// Coordinatewise soft threshold: argmin of `lambda |x|_1 + 1/2 |x|^2 - <b, x>`
/// scaled by a diagonal `d`, i.e. `sign(b_i) max(|b_i| - lambda, 0) / d_i`.
pub fn soft_threshold(lambda: f64, d: &[f64], b: &[f64]) -> Vec<f64> {
    b.iter()
        .zip(d)
        .map(|(&bi, &di)| {
            let s = bi.abs() - lambda;
            if s > 0.0 {
                bi.signum() * s / di
            } else {
                0.0
            }
        })
        .collect()
}

/// Minimizes a 1-D function on `[lo, hi]` by a grid of `n` cells followed by
/// ternary search in the two cells around the best node.
pub fn brute_min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let best = (0..=n)
        .min_by(|&i, &j| f(lo + i as f64 * h).total_cmp(&f(lo + j as f64 * h)))
        .unwrap();
    let (mut a, mut b) = (
        (lo + (best as f64 - 1.0) * h).max(lo),
        (lo + (best as f64 + 1.0) * h).min(hi),
    );
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Minimizes a 2-D function on the square `[lo, hi]^2` by a grid with the
/// given step, refined by compass search over 8 directions.
pub fn brute_min_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, step: f64) -> [f64; 2] {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = [lo, lo];
    let mut fbest = f(lo, lo);
    for i in 0..=n {
        let x = lo + i as f64 * step;
        for j in 0..=n {
            let y = lo + j as f64 * step;
            let v = f(x, y);
            if v < fbest {
                fbest = v;
                best = [x, y];
            }
        }
    }
    let dirs = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    let mut s = step;
    while s > 1e-13 {
        let mut improved = false;
        for (dx, dy) in dirs {
            let c = [best[0] + s * dx, best[1] + s * dy];
            let v = f(c[0], c[1]);
            if v < fbest {
                fbest = v;
                best = c;
                improved = true;
            }
        }
        if !improved {
            s *= 0.5;
        }
    }
    best
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
