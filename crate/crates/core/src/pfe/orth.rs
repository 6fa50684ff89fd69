//! Nearest matrix with orthonormal columns.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U Σ Vᵀ` by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `(U, σ, V)` with `U` of shape `n × d`. Columns of `U` belonging to
/// zero singular values are left unnormalized.
pub fn thin_svd<T: Real>(a: &DenseMatrix<T>) -> (DenseMatrix<T>, Vec<T>, DenseMatrix<T>) {
    let (n, d) = a.shape();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(d);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s, n);
                rotate_columns(&mut v, p, q, c, s, d);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<T> = (0..d).map(|j| dot(w.col(j), w.col(j)).sqrt()).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > T::zero() {
            for x in w.col_mut(j) {
                *x /= s;
            }
        }
    }
    (w, sigma, v)
}

fn rotate_columns<T: Real>(m: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T, rows: usize) {
    for i in 0..rows {
        let (mp, mq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * mp - s * mq;
        m[(i, q)] = s * mp + c * mq;
    }
}

/// Frobenius-nearest `P` to `A` subject to `PᵀP = I`, i.e. the polar factor
/// `P = U Vᵀ` of the thin SVD.
pub fn project_orthogonal<T: Real>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (n, d) = a.shape();
    if d > n {
        return Err(Error::RankDeficient {
            deficient: d - n,
            cols: d,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("orthogonal projection input".into()));
    }
    let (u, sigma, v) = thin_svd(a);
    let smax = sigma.iter().copied().fold(T::zero(), T::max);
    let tol = smax * T::epsilon() * T::from_usize_lossy(n.max(d)) * T::lit(10.0);
    let deficient = sigma.iter().filter(|&&s| !(s > tol)).count();
    if deficient > 0 {
        return Err(Error::RankDeficient { deficient, cols: d });
    }
    let mut p = DenseMatrix::zeros(n, d);
    for k in 0..d {
        for j in 0..d {
            let vkj = v[(k, j)];
            let uj = u.col(j);
            for (pi, &ui) in p.col_mut(k).iter_mut().zip(uj) {
                *pi += ui * vkj;
            }
        }
    }
    Ok(p)
}
