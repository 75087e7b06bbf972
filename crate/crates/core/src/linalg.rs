//! Small dense complex linear algebra: Hermitian eigendecomposition (cyclic
//! Jacobi), LU determinants, pivoted Cholesky for real PSD matrices.
//!
//! Everything here is deterministic — no BLAS backend, no thread-dependent
//! reduction order — so identical inputs give bit-identical results across
//! worker counts, which the sampling/report reproducibility contract needs.
//! Matrix sizes in this crate stay ≤ a few hundred, so O(n³) sweeps are fine.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;
pub type RMat = Array2<f64>;

pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Conjugate transpose.
pub fn adjoint(a: &CMat) -> CMat {
    let (n, m) = a.dim();
    CMat::from_shape_fn((m, n), |(i, j)| a[[j, i]].conj())
}

/// Entrywise conjugation (the antiunitary involution in a real basis).
pub fn conj_mat(a: &CMat) -> CMat {
    a.mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMat {
    CMat::from_shape_fn((n, n), |(i, j)| if i == j { cr(1.0) } else { czero() })
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    max_abs_diff(a, &adjoint(a)) <= tol * max_abs(a).max(1.0)
}

pub fn is_symmetric(a: &CMat, tol: f64) -> bool {
    max_abs_diff(a, &a.t().to_owned()) <= tol * max_abs(a).max(1.0)
}

/// Rows/columns of `a` restricted to `idx` (indices may repeat).
pub fn submatrix(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_shape_fn((idx.len(), idx.len()), |(r, c)| a[[idx[r], idx[c]]])
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (na, _) = a.dim();
    let (nb, _) = b.dim();
    let mut out = CMat::from_elem((na + nb, na + nb), czero());
    for i in 0..na {
        for j in 0..na {
            out[[i, j]] = a[[i, j]];
        }
    }
    for i in 0..nb {
        for j in 0..nb {
            out[[na + i, na + j]] = b[[i, j]];
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the unitary `u` whose columns are the
/// matching eigenvectors, with `a = u · diag(λ) · u†`. Input is symmetrized
/// (`(a+a†)/2`) first; callers gate Hermiticity separately where it matters.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eig needs a square matrix");
    let mut m = CMat::from_shape_fn((n, n), |(i, j)| (a[[i, j]] + a[[j, i]].conj()) * 0.5);
    let mut u = identity(n);
    let scale = max_abs(&m).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[[p, q]].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    m[[p, q]] = czero();
                    m[[q, p]] = czero();
                    continue;
                }
                let phase = apq / r; // e^{iα}
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let d = (app - aqq) / (2.0 * r);
                // smaller-magnitude root of t² − 2dt − 1 = 0
                let t = if d >= 0.0 {
                    -1.0 / (d + (d * d + 1.0).sqrt())
                } else {
                    1.0 / (-d + (d * d + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rotation columns: u_p = c·e_p − s·conj(phase)·e_q,
                //                   u_q = s·phase·e_p + c·e_q
                let sp = phase * s;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    let new_kp = akp * c - akq * sp.conj();
                    let new_kq = akp * sp + akq * c;
                    m[[k, p]] = new_kp;
                    m[[p, k]] = new_kp.conj();
                    m[[k, q]] = new_kq;
                    m[[q, k]] = new_kq.conj();
                }
                let new_pp = c * c * app - 2.0 * c * s * r + s * s * aqq;
                let new_qq = s * s * app + 2.0 * c * s * r + c * c * aqq;
                m[[p, p]] = cr(new_pp);
                m[[q, q]] = cr(new_qq);
                m[[p, q]] = czero();
                m[[q, p]] = czero();
                for k in 0..n {
                    let ukp = u[[k, p]];
                    let ukq = u[[k, q]];
                    u[[k, p]] = ukp * c - ukq * sp.conj();
                    u[[k, q]] = ukp * sp + ukq * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let usorted = CMat::from_shape_fn((n, n), |(i, j)| u[[i, order[j]]]);
    (sorted, usorted)
}

/// Apply a scalar function to the spectrum of a Hermitian matrix.
pub fn hermitian_func(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (ev, u) = hermitian_eig(a);
    let n = a.nrows();
    let mut scaled = u.clone();
    for j in 0..n {
        let fv = f(ev[j]);
        for i in 0..n {
            scaled[[i, j]] *= fv;
        }
    }
    scaled.dot(&adjoint(&u))
}

/// Determinant via partial-pivot LU.
pub fn lu_det(a: &CMat) -> C64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return cr(1.0);
    }
    let mut m = a.clone();
    let mut det = cr(1.0);
    for k in 0..n {
        let mut piv = k;
        let mut best = m[[k, k]].norm();
        for i in (k + 1)..n {
            let v = m[[i, k]].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return czero();
        }
        if piv != k {
            for j in 0..n {
                let t = m[[k, j]];
                m[[k, j]] = m[[piv, j]];
                m[[piv, j]] = t;
            }
            det = -det;
        }
        let d = m[[k, k]];
        det *= d;
        for i in (k + 1)..n {
            let f = m[[i, k]] / d;
            for j in (k + 1)..n {
                let sub = f * m[[k, j]];
                m[[i, j]] -= sub;
            }
        }
    }
    det
}

/// Pivoted Cholesky of a real symmetric PSD matrix with clipping.
///
/// Returns `(perm, l)` with `a[perm[i]][perm[j]] ≈ (l·lᵀ)[i][j]`; pivots in
/// `[-tol·scale, tol·scale]` are clipped to zero (rank-deficient laws are
/// legitimate), anything more negative is rejected — the matrix is not a
/// covariance.
pub fn pivoted_cholesky_psd(a: &RMat, tol: f64) -> Result<(Vec<usize>, RMat)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let scale = a.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = RMat::zeros((n, n));
    for k in 0..n {
        let mut piv = k;
        let mut best = w[[k, k]];
        for i in (k + 1)..n {
            if w[[i, i]] > best {
                best = w[[i, i]];
                piv = i;
            }
        }
        if best < -tol * scale {
            return Err(Error::Validation(format!(
                "real embedding not PSD: pivot {} at elimination step {}",
                best, k
            )));
        }
        if best <= tol * scale {
            break; // remaining block is numerically zero
        }
        if piv != k {
            perm.swap(k, piv);
            for j in 0..n {
                let t = w[[k, j]];
                w[[k, j]] = w[[piv, j]];
                w[[piv, j]] = t;
            }
            for i in 0..n {
                let t = w[[i, k]];
                w[[i, k]] = w[[i, piv]];
                w[[i, piv]] = t;
            }
            for j in 0..k {
                let t = l[[k, j]];
                l[[k, j]] = l[[piv, j]];
                l[[piv, j]] = t;
            }
        }
        let d = w[[k, k]].max(0.0).sqrt();
        l[[k, k]] = d;
        for i in (k + 1)..n {
            l[[i, k]] = w[[i, k]] / d;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..=i {
                w[[i, j]] -= l[[i, k]] * l[[j, k]];
                w[[j, i]] = w[[i, j]];
            }
        }
    }
    Ok((perm, l))
}
