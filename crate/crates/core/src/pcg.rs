//! Preconditioned conjugate gradients for SPD systems, with a driver that
//! solves several right-hand sides against one shared matrix and
//! preconditioner.

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};
use crate::sparse::{incomplete_cholesky, CsrMatrix, IcFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Ic0,
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgConfig<T> {
    pub rel_tol: T,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl<T: Real> Default for PcgConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-6),
            max_iter: 1000,
            preconditioner: Preconditioner::Ic0,
        }
    }
}

impl<T: Real> PcgConfig<T> {
    pub fn with_tol(rel_tol: T) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) {
            return Err(Error::InvalidParameter(format!("PCG rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("PCG max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgReport {
    pub iterations: usize,
    /// `‖b − Ax‖₂ / ‖b‖₂` of the returned iterate, recomputed explicitly.
    pub final_rel_residual: f64,
    pub converged: bool,
    /// Set when IC(0) broke down and Jacobi scaling was used instead.
    pub jacobi_fallback: bool,
}

/// A preconditioner built once for a matrix and applied read-only.
#[derive(Debug, Clone)]
pub enum PreparedPreconditioner<T> {
    Ic(IcFactor<T>),
    Jacobi(Vec<T>),
    Identity,
}

impl<T: Real> PreparedPreconditioner<T> {
    /// Builds the requested preconditioner; IC(0) breakdown degrades to Jacobi.
    pub fn build(a: &CsrMatrix<T>, kind: Preconditioner) -> Result<Self> {
        match kind {
            Preconditioner::None => Ok(Self::Identity),
            Preconditioner::Jacobi => Self::jacobi(a),
            Preconditioner::Ic0 => match incomplete_cholesky(a) {
                Ok(f) => Ok(Self::Ic(f)),
                Err(Error::IcBreakdown { attempts }) => {
                    log::warn!("IC(0) failed after {attempts} shifts, falling back to Jacobi");
                    Self::jacobi(a)
                }
                Err(e) => Err(e),
            },
        }
    }

    fn jacobi(a: &CsrMatrix<T>) -> Result<Self> {
        let diag = a.diag();
        if let Some(i) = diag.iter().position(|&v| !(v > T::zero())) {
            return Err(Error::ZeroDiagonal(i));
        }
        Ok(Self::Jacobi(diag.into_iter().map(|v| T::one() / v).collect()))
    }

    fn apply(&self, r: &[T], z: &mut [T]) -> Result<()> {
        match self {
            Self::Identity => z.copy_from_slice(r),
            Self::Jacobi(inv) => {
                for ((zi, &ri), &s) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * s;
                }
            }
            Self::Ic(f) => {
                z.copy_from_slice(r);
                f.apply_inverse(z)?;
            }
        }
        Ok(())
    }

    fn is_fallback_for(&self, kind: Preconditioner) -> bool {
        kind == Preconditioner::Ic0 && matches!(self, Self::Jacobi(_))
    }
}

/// Solves `Ax = b` from the starting point `x0`.
///
/// With `b = 0` the result is `x = 0` after zero iterations. When the
/// iteration cap is hit, the iterate with the smallest residual seen is
/// returned with `converged = false`.
pub fn pcg_solve<T: Real>(a: &CsrMatrix<T>, b: &[T], x0: &[T], cfg: &PcgConfig<T>) -> Result<(Vec<T>, PcgReport)> {
    cfg.validate()?;
    check_dims(a, b.len(), x0.len())?;
    let pre = PreparedPreconditioner::build(a, cfg.preconditioner)?;
    pcg_solve_prepared(a, &pre, b, x0, cfg)
}

fn check_dims<T: Real>(a: &CsrMatrix<T>, b_len: usize, x_len: usize) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::mismatch("square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    if b_len != a.nrows() {
        return Err(Error::mismatch(a.nrows(), b_len));
    }
    if x_len != a.ncols() {
        return Err(Error::mismatch(a.ncols(), x_len));
    }
    Ok(())
}

/// [`pcg_solve`] with a preconditioner built by the caller.
pub fn pcg_solve_prepared<T: Real>(
    a: &CsrMatrix<T>,
    pre: &PreparedPreconditioner<T>,
    b: &[T],
    x0: &[T],
    cfg: &PcgConfig<T>,
) -> Result<(Vec<T>, PcgReport)> {
    check_dims(a, b.len(), x0.len())?;
    let n = b.len();
    let fallback = pre.is_fallback_for(cfg.preconditioner);
    let b_norm = norm2(b);
    if !b_norm.is_finite() {
        return Err(Error::NonFinite("PCG right-hand side".into()));
    }
    if b_norm == T::zero() {
        return Ok((
            vec![T::zero(); n],
            PcgReport {
                iterations: 0,
                final_rel_residual: 0.0,
                converged: true,
                jacobi_fallback: fallback,
            },
        ));
    }

    let mut x = x0.to_vec();
    let mut r = vec![T::zero(); n];
    let mut q = vec![T::zero(); n];
    let residual = |x: &[T], r: &mut [T], scratch: &mut [T]| {
        a.spmv_into(x, scratch);
        for ((ri, &bi), &ai) in r.iter_mut().zip(b).zip(scratch.iter()) {
            *ri = bi - ai;
        }
    };
    residual(&x, &mut r, &mut q);
    let mut rel = norm2(&r) / b_norm;
    if !rel.is_finite() {
        return Err(Error::NonFinite("PCG initial residual".into()));
    }
    let mut best_x = x.clone();
    let mut best_rel = rel;
    let mut iterations = 0;
    let mut converged = rel <= cfg.rel_tol;

    let mut z = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut restart = true;
    let mut rz = T::zero();

    while !converged && iterations < cfg.max_iter {
        if restart {
            pre.apply(&r, &mut z)?;
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            restart = false;
        }
        a.spmv_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !pq.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite(format!("PCG iteration {}", iterations + 1)));
        }
        if pq <= T::zero() {
            log::warn!("PCG breakdown: pᵀAp = {pq:e} is not positive");
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;

        rel = norm2(&r) / b_norm;
        if !rel.is_finite() {
            return Err(Error::NonFinite(format!("PCG iteration {iterations}")));
        }
        if rel <= cfg.rel_tol {
            // confirm against the true residual before stopping
            residual(&x, &mut r, &mut q);
            rel = norm2(&r) / b_norm;
            if rel <= cfg.rel_tol {
                converged = true;
            } else {
                restart = true;
            }
        }
        if rel < best_rel {
            best_rel = rel;
            best_x.copy_from_slice(&x);
        }
        if converged || restart {
            continue;
        }
        pre.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    let x = if converged { x } else { best_x };
    residual(&x, &mut r, &mut q);
    let final_rel = norm2(&r) / b_norm;
    Ok((
        x,
        PcgReport {
            iterations,
            final_rel_residual: final_rel.to_f64_lossy(),
            converged,
            jacobi_fallback: fallback,
        },
    ))
}

/// Result of a multi-column solve. Columns whose solve failed keep their
/// starting values and carry the error in `reports`.
#[derive(Debug)]
pub struct MultiSolve<T> {
    pub x: DenseMatrix<T>,
    pub reports: Vec<Result<PcgReport>>,
}

impl<T> MultiSolve<T> {
    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| matches!(r, Ok(rep) if rep.converged))
    }

    pub fn total_iterations(&self) -> usize {
        self.reports.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.iterations).sum()
    }
}

/// Solves `A X = B` column by column, building the preconditioner once.
pub fn pcg_solve_multi<T: Real>(
    a: &CsrMatrix<T>,
    b: &DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    cfg: &PcgConfig<T>,
) -> Result<MultiSolve<T>> {
    cfg.validate()?;
    let pre = PreparedPreconditioner::build(a, cfg.preconditioner)?;
    pcg_solve_multi_prepared(a, &pre, b, x0, cfg)
}

pub fn pcg_solve_multi_prepared<T: Real>(
    a: &CsrMatrix<T>,
    pre: &PreparedPreconditioner<T>,
    b: &DenseMatrix<T>,
    x0: &DenseMatrix<T>,
    cfg: &PcgConfig<T>,
) -> Result<MultiSolve<T>> {
    if b.shape() != x0.shape() {
        return Err(Error::mismatch(
            format!("{:?}", b.shape()),
            format!("{:?}", x0.shape()),
        ));
    }
    check_dims(a, b.nrows(), x0.nrows())?;
    let results: Vec<Result<(Vec<T>, PcgReport)>> = (0..b.ncols())
        .into_par_iter()
        .map(|j| pcg_solve_prepared(a, pre, b.col(j), x0.col(j), cfg))
        .collect();
    let mut x = x0.clone();
    let mut reports = Vec::with_capacity(results.len());
    for (j, res) in results.into_iter().enumerate() {
        match res {
            Ok((col, rep)) => {
                x.col_mut(j).copy_from_slice(&col);
                reports.push(Ok(rep));
            }
            Err(e) => reports.push(Err(e)),
        }
    }
    Ok(MultiSolve { x, reports })
}
