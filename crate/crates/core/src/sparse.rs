//! Compressed sparse row matrices and the kernels the solver needs:
//! products, the normal-equation matrix `(λ/2)MᵀM + (r/2)D`, zero-fill
//! incomplete Cholesky and triangular solves.
//!
//! All row reductions sum left to right in column order so results are
//! bitwise reproducible.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed in input order and entries that sum to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        for &(row, col, v) in triplets {
            if row >= nrows || col >= ncols {
                return Err(Error::IndexOutOfRange {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("triplet ({row}, {col})")));
            }
        }
        // stable sort keeps duplicate order, so summation order is input order
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut it = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                it.next();
            }
            if v != T::zero() {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from raw CSR arrays, checking every structural invariant.
    pub fn from_raw_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return Err(Error::mismatch(format!("row_ptr of length {}", nrows + 1), row_ptr.len()));
        }
        if col_idx.len() != values.len() || row_ptr[nrows] != values.len() {
            return Err(Error::mismatch(row_ptr[nrows], values.len()));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidParameter(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!("columns of row {i} not strictly increasing")));
            }
            if let Some(&c) = cols.iter().find(|&&c| c >= ncols) {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("CSR values".into()));
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Stored value at `(i, j)`, zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |p| vals[p])
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        // rows visited in increasing order keep each output row sorted
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols {
            return Err(Error::mismatch(self.ncols, x.len()));
        }
        let mut y = vec![T::zero(); self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` into a caller buffer; lengths are the caller's responsibility.
    pub fn spmv_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// `A X` for a dense multi-column right side; column `j` is exactly
    /// `spmv(X[:, j])`.
    pub fn spmm_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.nrows() != self.ncols {
            return Err(Error::mismatch(self.ncols, x.nrows()));
        }
        let mut out = DenseMatrix::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            self.spmv_into(x.col(j), out.col_mut(j));
        }
        Ok(out)
    }

    fn lower_with_diagonal(&self) -> Self {
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            col_idx.push(i);
            values.push(self.get(i, i));
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Assembles `A = (λ/2)MᵀM + (r/2)diag(d)`.
///
/// `(MᵀM)_ij = Σ_k M_ki M_kj` is accumulated over `k` in increasing order for
/// every entry, so `A_ij` and `A_ji` are bitwise equal.
pub fn form_normal_matrix<T: Real>(m: &CsrMatrix<T>, degree: &[T], lambda: T, r: T) -> Result<CsrMatrix<T>> {
    let n = m.ncols();
    if degree.len() != n {
        return Err(Error::mismatch(n, degree.len()));
    }
    if !(lambda >= T::zero()) || !(r > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "normal matrix needs lambda >= 0 and r > 0, got lambda={lambda}, r={r}"
        )));
    }
    if let Some(i) = degree.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::IsolatedVertex(i));
    }
    let half = T::lit(0.5);
    let mt = m.transpose();

    let mut acc = vec![T::zero(); n];
    let mut touched = vec![false; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);

    for i in 0..n {
        pattern.clear();
        touched[i] = true;
        pattern.push(i);
        let (ks, mki) = mt.row(i);
        for (&k, &a) in ks.iter().zip(mki) {
            let (js, mkj) = m.row(k);
            for (&j, &b) in js.iter().zip(mkj) {
                if !touched[j] {
                    touched[j] = true;
                    pattern.push(j);
                }
                acc[j] += a * b;
            }
        }
        pattern.sort_unstable();
        for &j in &pattern {
            let mut v = half * lambda * acc[j];
            if j == i {
                v += half * r * degree[i];
            }
            col_idx.push(j);
            values.push(v);
            acc[j] = T::zero();
            touched[j] = false;
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix {
        nrows: n,
        ncols: n,
        row_ptr,
        col_idx,
        values,
    })
}

/// Lower-triangular incomplete Cholesky factor `L` with `LLᵀ ≈ A + shift·I`.
#[derive(Debug, Clone)]
pub struct IcFactor<T> {
    lower: CsrMatrix<T>,
    upper: CsrMatrix<T>,
    shift: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangularMode {
    /// Solve `L x = b`.
    Forward,
    /// Solve `Lᵀ x = b`.
    Backward,
}

const IC_MAX_SHIFTS: usize = 8;

impl<T: Real> IcFactor<T> {
    /// Wraps an existing lower-triangular matrix (diagonal stored last in
    /// every row) as a factor.
    pub fn from_lower(lower: CsrMatrix<T>) -> Result<Self> {
        if lower.nrows() != lower.ncols() {
            return Err(Error::mismatch(lower.nrows(), lower.ncols()));
        }
        for i in 0..lower.nrows() {
            let (cols, _) = lower.row(i);
            if cols.last() != Some(&i) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} of a triangular factor must end with its diagonal entry"
                )));
            }
        }
        let upper = lower.transpose();
        Ok(Self {
            lower,
            upper,
            shift: T::zero(),
        })
    }

    pub fn lower(&self) -> &CsrMatrix<T> {
        &self.lower
    }

    /// Diagonal shift that was added to `A` for the factorization to succeed.
    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `Lx = b` or `Lᵀx = b` in place.
    pub fn solve_in_place(&self, x: &mut [T], mode: TriangularMode) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::mismatch(n, x.len()));
        }
        match mode {
            TriangularMode::Forward => {
                for i in 0..n {
                    let (cols, vals) = self.lower.row(i);
                    let last = cols.len() - 1;
                    let mut s = x[i];
                    for p in 0..last {
                        s -= vals[p] * x[cols[p]];
                    }
                    let diag = vals[last];
                    if diag == T::zero() {
                        return Err(Error::ZeroDiagonal(i));
                    }
                    x[i] = s / diag;
                }
            }
            TriangularMode::Backward => {
                for i in (0..n).rev() {
                    let (cols, vals) = self.upper.row(i);
                    let mut s = x[i];
                    for p in 1..cols.len() {
                        s -= vals[p] * x[cols[p]];
                    }
                    let diag = vals[0];
                    if diag == T::zero() {
                        return Err(Error::ZeroDiagonal(i));
                    }
                    x[i] = s / diag;
                }
            }
        }
        Ok(())
    }

    /// Applies `(LLᵀ)⁻¹` in place.
    pub fn apply_inverse(&self, x: &mut [T]) -> Result<()> {
        self.solve_in_place(x, TriangularMode::Forward)?;
        self.solve_in_place(x, TriangularMode::Backward)
    }
}

pub fn triangular_solve<T: Real>(factor: &IcFactor<T>, b: &[T], mode: TriangularMode) -> Result<Vec<T>> {
    let mut x = b.to_vec();
    factor.solve_in_place(&mut x, mode)?;
    Ok(x)
}

/// Zero-fill incomplete Cholesky, IC(0).
///
/// When a pivot is not positive the factorization restarts on `A + αI` with
/// `α = 1e-3·max(diag A)`, doubling `α` for up to eight attempts.
pub fn incomplete_cholesky<T: Real>(a: &CsrMatrix<T>) -> Result<IcFactor<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::mismatch(a.nrows(), a.ncols()));
    }
    let pattern = a.lower_with_diagonal();
    if let Some(l) = ic0_attempt(&pattern, T::zero()) {
        return IcFactor::from_lower(l);
    }
    let max_diag = a.diag().into_iter().fold(T::zero(), T::max);
    let mut alpha = T::lit(1e-3) * max_diag;
    if !(alpha > T::zero()) {
        alpha = T::lit(1e-3);
    }
    for attempt in 1..=IC_MAX_SHIFTS {
        if let Some(l) = ic0_attempt(&pattern, alpha) {
            log::debug!("IC(0) succeeded with diagonal shift {alpha:e} on attempt {attempt}");
            let mut f = IcFactor::from_lower(l)?;
            f.shift = alpha;
            return Ok(f);
        }
        alpha = alpha + alpha;
    }
    Err(Error::IcBreakdown {
        attempts: IC_MAX_SHIFTS,
    })
}

/// One IC(0) pass over the lower pattern of `A + shift·I`; `None` on a
/// nonpositive pivot.
fn ic0_attempt<T: Real>(pattern: &CsrMatrix<T>, shift: T) -> Option<CsrMatrix<T>> {
    let n = pattern.nrows();
    let mut l = pattern.clone();
    for i in 0..n {
        let start = l.row_ptr[i];
        let end = l.row_ptr[i + 1];
        let diag_pos = end - 1;
        for p in start..diag_pos {
            let k = l.col_idx[p];
            // Σ_{j<k} L_ij L_kj over the shared pattern
            let mut s = l.values[p];
            let (kstart, kend) = (l.row_ptr[k], l.row_ptr[k + 1] - 1);
            let (mut a, mut b) = (start, kstart);
            while a < p && b < kend {
                let (ca, cb) = (l.col_idx[a], l.col_idx[b]);
                if ca == cb {
                    s -= l.values[a] * l.values[b];
                    a += 1;
                    b += 1;
                } else if ca < cb {
                    a += 1;
                } else {
                    b += 1;
                }
            }
            l.values[p] = s / l.values[kend];
        }
        let mut d = l.values[diag_pos] + shift;
        for p in start..diag_pos {
            d -= l.values[p] * l.values[p];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        l.values[diag_pos] = d.sqrt();
    }
    Some(l)
}
