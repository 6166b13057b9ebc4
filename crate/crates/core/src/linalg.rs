//! Small dense symmetric eigen-solver (cyclic Jacobi) and a minimum-norm
//! least-squares solve built on it.

use nalgebra::{DMatrix, DVector};

/// Eigenvalues and eigenvectors (columns) of the symmetric part of `a`.
pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::identity(n, n);
    let scale = m.norm();
    if scale == 0.0 || !scale.is_finite() {
        return (m.diagonal(), v);
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (m.diagonal(), v)
}

/// Minimum-norm solution of `k x = rhs` (column by column), via the
/// pseudo-inverse of the Gram matrix `k k^T`: `x = k^T (k k^T)⁺ rhs`.
pub(crate) fn min_norm_solve(k: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = k * k.transpose();
    let (vals, vecs) = sym_eigen(&gram);
    let top = vals.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let cutoff = f64::EPSILON * (k.nrows().max(k.ncols()) as f64) * top;
    let mut proj = vecs.transpose() * rhs;
    for (i, lam) in vals.iter().enumerate() {
        let inv = if *lam > cutoff { 1.0 / lam } else { 0.0 };
        proj.row_mut(i).scale_mut(inv);
    }
    k.transpose() * (vecs * proj)
}
