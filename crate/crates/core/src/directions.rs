//! Minimum eigenpairs, negative curvature directions, and the capped-CG
//! subsolver used by the SS-NC-CG baseline.
//!
//! The eigensolver is a dense Householder tridiagonalization followed by
//! implicit QL with Wilkinson-style shifts (the classic `tred2`/`tql2` pair).

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub lambda_min: f64,
    /// Unit eigenvector, first significant component positive.
    pub eigvec: Vec<f64>,
    /// `||H v - lambda v||_2`
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NcDirection {
    pub q: Vec<f64>,
    pub gamma: f64,
    pub delta: f64,
    /// `q^T H q`
    pub curvature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgKind {
    NewtonLike,
    NegativeCurvature,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub kind: CgKind,
    pub direction: Vec<f64>,
    pub iterations: usize,
}

/// Full symmetric eigendecomposition: ascending eigenvalues and the matching
/// eigenvectors as columns of the returned matrix.
fn symmetric_eigen(h: &Matrix) -> (Vec<f64>, Matrix) {
    let n = h.dim();
    let mut v = h.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return (d, v);
    }
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    (d, v)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(h: &Matrix) -> Vec<f64> {
    symmetric_eigen(h).0
}

/// Householder reduction to tridiagonal form; `v` is overwritten with the
/// accumulated orthogonal transform.
fn tred2(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, accumulating into `v`. Leaves
/// eigenvalues sorted ascending.
fn tql2(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort keeps the column swaps simple.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                let tmp = v[(row, i)];
                v[(row, i)] = v[(row, k)];
                v[(row, k)] = tmp;
            }
        }
    }
}

/// Algebraically smallest eigenvalue of a symmetric matrix with a unit
/// eigenvector. The sign is fixed so the first component whose magnitude
/// exceeds `1e-12 * max|v_i|` is positive.
pub fn min_eigenpair(h: &Matrix) -> Result<EigenResult> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("Hessian estimate has non-finite entries".into()));
    }
    let (d, v) = symmetric_eigen(h);
    let mut vec: Vec<f64> = (0..n).map(|i| v[(i, 0)]).collect();
    let nv = norm(&vec);
    for c in vec.iter_mut() {
        *c /= nv;
    }
    let big = vec.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if let Some(first) = vec.iter().find(|c| c.abs() > 1e-12 * big) {
        if *first < 0.0 {
            for c in vec.iter_mut() {
                *c = -*c;
            }
        }
    }
    let lambda = d[0];
    let hv = h.mul_vec(&vec);
    let residual = norm(&hv.iter().zip(&vec).map(|(a, b)| a - lambda * b).collect::<Vec<_>>());
    Ok(EigenResult {
        lambda_min: lambda,
        eigvec: vec,
        residual,
    })
}

/// Scales the minimum eigenvector to `||q|| = delta * |lambda_min|`.
///
/// Then `q^T H q = lambda_min ||q||^2 <= gamma lambda_min ||q||^2 < 0` for any
/// `gamma` in (0, 1].
pub fn nc_direction(h: &Matrix, eig: &EigenResult, gamma: f64, delta: f64) -> Result<NcDirection> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if !(eig.lambda_min < 0.0) {
        return Err(Error::NoNegativeCurvature(eig.lambda_min));
    }
    let len = delta * eig.lambda_min.abs();
    let q: Vec<f64> = eig.eigvec.iter().map(|c| c * len).collect();
    let curvature = h.quad_form(&q);
    Ok(NcDirection {
        q,
        gamma,
        delta,
        curvature,
    })
}

/// Residual tolerance used by [`capped_cg`], relative to `||g||`.
pub const CG_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Conjugate gradient on `(H + 2 eps_cap I) s = -g`, stopping at the first
/// search direction whose shifted curvature is at most `eps_cap ||p||^2`.
pub fn capped_cg(h: &Matrix, g: &[f64], eps_cap: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = h.dim();
    if n == 0 || g.len() != n {
        return Err(Error::InvalidInput(format!(
            "capped_cg: matrix dim {n}, gradient length {}",
            g.len()
        )));
    }
    if !(eps_cap > 0.0) {
        return Err(Error::Domain(format!("eps_cap must be positive, got {eps_cap}")));
    }
    let shift = 2.0 * eps_cap;
    let tol = CG_RELATIVE_TOLERANCE * norm(g);

    let mut s = vec![0.0; n];
    let mut r = g.to_vec();
    let mut rr = dot(&r, &r);
    let mut p: Vec<f64> = r.iter().map(|v| -v).collect();
    if rr.sqrt() <= tol {
        return Ok(CgOutcome {
            kind: CgKind::NewtonLike,
            direction: s,
            iterations: 0,
        });
    }
    for it in 1..=max_iter.max(1) {
        let mut hp = h.mul_vec(&p);
        for (a, b) in hp.iter_mut().zip(&p) {
            *a += shift * b;
        }
        let curv = dot(&p, &hp);
        if curv <= eps_cap * dot(&p, &p) {
            return Ok(CgOutcome {
                kind: CgKind::NegativeCurvature,
                direction: p,
                iterations: it,
            });
        }
        let step = rr / curv;
        for i in 0..n {
            s[i] += step * p[i];
            r[i] += step * hp[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol || it == max_iter.max(1) {
            return Ok(CgOutcome {
                kind: CgKind::NewtonLike,
                direction: s,
                iterations: it,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = -r[i] + beta * p[i];
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_min_eigenpair() {
        let e = min_eigenpair(&Matrix::from_diag(&[2.0, -1.0])).unwrap();
        assert_eq!(e.lambda_min, -1.0);
        assert_eq!(e.eigvec, vec![0.0, 1.0]);
        assert!(e.residual < 1e-15);
    }

    #[test]
    fn rosenbrock_origin_hessian() {
        let e = min_eigenpair(&Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 200.0]])).unwrap();
        assert!((e.lambda_min - 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let e = min_eigenpair(&Matrix::from_diag(&[-3.0])).unwrap();
        assert_eq!(e.lambda_min, -3.0);
        assert_eq!(e.eigvec, vec![1.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::from_rows(&[&[1.0, f64::NAN], &[f64::NAN, 1.0]]);
        assert!(matches!(min_eigenpair(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn sign_convention() {
        let m = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = min_eigenpair(&m).unwrap();
        assert!((e.lambda_min + 1.0).abs() < 1e-14);
        assert!(e.eigvec[0] > 0.0 && e.eigvec[1] < 0.0);
    }

    #[test]
    fn nc_direction_diag_cases() {
        let h = Matrix::from_diag(&[2.0, -1.0]);
        let e = min_eigenpair(&h).unwrap();
        let d = nc_direction(&h, &e, 1.0, 2.0).unwrap();
        assert_eq!(d.q, vec![0.0, 2.0]);
        assert_eq!(d.curvature, -4.0);

        let d = nc_direction(&h, &e, 0.5, 1.0).unwrap();
        assert_eq!(d.q, vec![0.0, 1.0]);
        assert!(d.curvature <= -0.5);
    }

    #[test]
    fn nc_direction_requires_negative_curvature() {
        let h = Matrix::from_diag(&[2.0, 1.0]);
        let e = min_eigenpair(&h).unwrap();
        assert!(matches!(
            nc_direction(&h, &e, 0.9, 1.0),
            Err(Error::NoNegativeCurvature(_))
        ));
        let h = Matrix::from_diag(&[2.0, -1.0]);
        let e = min_eigenpair(&h).unwrap();
        assert!(nc_direction(&h, &e, 0.0, 1.0).is_err());
        assert!(nc_direction(&h, &e, 1.5, 1.0).is_err());
        assert!(nc_direction(&h, &e, 0.5, 0.0).is_err());
    }

    #[test]
    fn capped_cg_identity_newton() {
        let out = capped_cg(&Matrix::identity(2), &[1.0, 0.0], 0.1, 10).unwrap();
        assert_eq!(out.kind, CgKind::NewtonLike);
        assert!((out.direction[0] + 1.0 / 1.2).abs() < 1e-12);
        assert_eq!(out.direction[1], 0.0);
    }

    #[test]
    fn capped_cg_saddle_krylov() {
        let h = Matrix::from_diag(&[1.0, -1.0]);
        let out = capped_cg(&h, &[1.0, 0.0], 0.1, 10).unwrap();
        assert_eq!(out.kind, CgKind::NewtonLike);
        let out = capped_cg(&h, &[1.0, 1.0], 0.1, 10).unwrap();
        assert_eq!(out.kind, CgKind::NegativeCurvature);
        assert!(out.iterations <= 2);
        assert!(h.quad_form(&out.direction) < 0.0);
    }

    #[test]
    fn capped_cg_negative_identity() {
        let h = Matrix::identity(2).scaled(-1.0);
        let out = capped_cg(&h, &[1.0, 1.0], 0.1, 10).unwrap();
        assert_eq!(out.kind, CgKind::NegativeCurvature);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn capped_cg_rejects_empty() {
        assert!(matches!(
            capped_cg(&Matrix::zeros(0), &[], 0.1, 5),
            Err(Error::InvalidInput(_))
        ));
    }
}
