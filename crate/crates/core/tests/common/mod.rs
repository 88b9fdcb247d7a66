//! Reference computations written independently of the library's numerics.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssnc::linalg::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with entries uniform in [-1, 1].
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.gen_range(-1.0..1.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

pub fn to_matrix(a: &[Vec<f64>]) -> Matrix {
    let n = a.len();
    Matrix::from_row_major(n, a.iter().flatten().copied().collect()).unwrap()
}

/// Number of eigenvalues of `a` strictly below `t`, from the signs of the
/// pivots of `a - t I` (Sylvester's law of inertia). The pivot signs are the
/// sign changes of the sequence of leading principal minors of the
/// characteristic matrix.
pub fn count_below(a: &[Vec<f64>], t: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= t;
    }
    let tiny = 1e-300;
    let mut neg = 0;
    for k in 0..n {
        let mut p = m[k][k];
        if p == 0.0 {
            p = -tiny;
        }
        if p < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let l = m[i][k] / p;
            for j in k + 1..n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    neg
}

/// Smallest eigenvalue by bisection on the inertia count.
pub fn bisect_lambda_min(a: &[Vec<f64>]) -> f64 {
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in a.iter().enumerate() {
        let r: f64 = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.abs())
            .sum();
        lo = lo.min(row[i] - r);
        hi = hi.max(row[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn solve(m: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        })
        .collect();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        let p = if a[k][k] == 0.0 { 1e-300 } else { a[k][k] };
        for i in k + 1..n {
            let l = a[i][k] / p;
            for j in k..=n {
                a[i][j] -= l * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        let p = if a[k][k] == 0.0 { 1e-300 } else { a[k][k] };
        x[k] = (a[k][n] - s) / p;
    }
    x
}

/// Unit eigenvector for `lambda` by shifted inverse iteration.
pub fn inverse_iteration(a: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let n = a.len();
    let scale = a.iter().flatten().map(|v| v.abs()).fold(1.0, f64::max);
    let shift = lambda - 1e-10 * scale;
    let mut m = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..8 {
        let w = solve(&m, &v);
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / nw).collect();
    }
    v
}

pub fn rayleigh(a: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * a[i][j] * v[j];
        }
    }
    s / v.iter().map(|x| x * x).sum::<f64>()
}
