//! The PFE solver.
//!
//! The outer loop splits the orthogonality constraint `YᵀDY = I` through
//! `P = D^{1/2}Y` with Bregman variable `B`. Each `Y` update minimizes
//! `‖MY‖₁ + (r/2)‖D^{1/2}Y − P + B‖²_F` by split Bregman with shrinkage
//! variable `s` and Bregman variable `b` (both `|E| × d`). The least-squares
//! step of that inner loop is the column-separable system
//!
//! ```text
//! [(λ/2)MᵀM + (r/2)D] Y = (λ/2)Mᵀ(s − b) + (r/2)D^{1/2}(P − B)
//! ```
//!
//! whose matrix depends only on the graph, `λ` and `r`, so it and its IC(0)
//! factor are built once per solver.

mod io;
mod orth;

pub use io::{format_embedding, parse_embedding, read_embedding, write_embedding};
pub use orth::{project_orthogonal, thin_svd};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::pcg::{pcg_solve_multi_prepared, PcgConfig, PreparedPreconditioner};
use crate::scalar::Real;
use crate::sparse::{form_normal_matrix, CsrMatrix};

/// An `n × d` embedding, one row per vertex.
pub type Embedding<T> = DenseMatrix<T>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfeParams<T> {
    pub d: usize,
    /// Split Bregman penalty; the shrinkage threshold is `1/λ`.
    pub lambda: T,
    /// Penalty on `D^{1/2}Y − P + B`.
    pub r: T,
    pub soc_max: usize,
    pub sb_max_stage1: usize,
    /// Zero disables stage II.
    pub sb_max_stage2: usize,
    /// Relative Frobenius change of `Y` that counts as converged.
    pub conv_tol: T,
    pub pcg: PcgConfig<T>,
}

impl<T: Real> PfeParams<T> {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            lambda: T::lit(100.0),
            r: T::one(),
            soc_max: 10,
            sb_max_stage1: 5,
            sb_max_stage2: 100,
            conv_tol: T::lit(1e-4),
            pcg: PcgConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.d == 0 {
            return bad("embedding dimension must be at least 1".into());
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if self.soc_max == 0 || self.sb_max_stage1 == 0 {
            return bad("SOC and stage-I split Bregman caps must be at least 1".into());
        }
        if !(self.conv_tol >= T::zero()) {
            return bad(format!("conv_tol must be nonnegative, got {}", self.conv_tol));
        }
        self.pcg.validate()
    }
}

/// Iterates of the nested Bregman scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    /// `n × d` embedding.
    pub y: Embedding<T>,
    /// `n × d` orthogonality split variable.
    pub p: DenseMatrix<T>,
    /// `n × d` outer Bregman variable.
    pub b_outer: DenseMatrix<T>,
    /// `|E| × d` inner Bregman variable.
    pub b_inner: DenseMatrix<T>,
    /// `|E| × d` shrinkage variable.
    pub s: DenseMatrix<T>,
}

impl<T: Real> SolverState<T> {
    pub fn reset_inner(&mut self) {
        self.b_inner.as_mut_slice().fill(T::zero());
        self.s.as_mut_slice().fill(T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite()
            && self.p.is_finite()
            && self.b_outer.is_finite()
            && self.b_inner.is_finite()
            && self.s.is_finite()
    }
}

/// What one split Bregman iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbStep<T> {
    pub rel_change: T,
    pub pcg_iterations: usize,
    pub pcg_converged: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SbStats {
    pub iterations: usize,
    pub pcg_iterations: usize,
    pub unconverged_solves: usize,
}

impl SbStats {
    fn absorb(&mut self, other: SbStats) {
        self.iterations += other.iterations;
        self.pcg_iterations += other.pcg_iterations;
        self.unconverged_solves += other.unconverged_solves;
    }
}

#[derive(Debug, Clone)]
pub struct PfeOutcome<T> {
    pub embedding: Embedding<T>,
    pub state: SolverState<T>,
    pub soc_iterations: usize,
    pub stage1: SbStats,
    pub stage2: SbStats,
}

/// Precomputed problem data for one graph and parameter set.
#[derive(Debug, Clone)]
pub struct PfeSolver<T> {
    params: PfeParams<T>,
    m: CsrMatrix<T>,
    mt: CsrMatrix<T>,
    degree: Vec<T>,
    sqrt_degree: Vec<T>,
    normal: CsrMatrix<T>,
    pre: PreparedPreconditioner<T>,
}

impl<T: Real> PfeSolver<T> {
    pub fn new(graph: &WeightedGraph<T>, params: PfeParams<T>) -> Result<Self> {
        Self::from_parts(graph.difference_matrix(), graph.degree_vector().to_vec(), params)
    }

    /// Builds from a difference matrix `M` and degree vector directly.
    pub fn from_parts(m: CsrMatrix<T>, degree: Vec<T>, params: PfeParams<T>) -> Result<Self> {
        params.validate()?;
        let normal = form_normal_matrix(&m, &degree, params.lambda, params.r)?;
        let pre = PreparedPreconditioner::build(&normal, params.pcg.preconditioner)?;
        let sqrt_degree = degree.iter().map(|d| d.sqrt()).collect();
        Ok(Self {
            params,
            mt: m.transpose(),
            m,
            degree,
            sqrt_degree,
            normal,
            pre,
        })
    }

    pub fn params(&self) -> &PfeParams<T> {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn num_edges(&self) -> usize {
        self.m.nrows()
    }

    pub fn difference_matrix(&self) -> &CsrMatrix<T> {
        &self.m
    }

    pub fn degree(&self) -> &[T] {
        &self.degree
    }

    pub fn sqrt_degree(&self) -> &[T] {
        &self.sqrt_degree
    }

    /// `(λ/2)MᵀM + (r/2)D`.
    pub fn normal_matrix(&self) -> &CsrMatrix<T> {
        &self.normal
    }

    pub fn objective(&self, y: &Embedding<T>) -> T {
        objective(&self.m, y)
    }

    /// `‖MY‖₁ + (r/2)‖D^{1/2}Y − P + B‖²_F`, the function each `Y` update of
    /// the outer loop minimizes.
    pub fn composite_objective(&self, y: &Embedding<T>, p: &DenseMatrix<T>, b_outer: &DenseMatrix<T>) -> T {
        let dy = y.scale_rows(&self.sqrt_degree);
        let mut sq = T::zero();
        for ((&a, &pp), &bb) in dy.as_slice().iter().zip(p.as_slice()).zip(b_outer.as_slice()) {
            let v = a - pp + bb;
            sq += v * v;
        }
        self.objective(y) + T::lit(0.5) * self.params.r * sq
    }

    /// Fresh state for the starting embedding: `P = D^{1/2}Y`, everything
    /// else zero.
    pub fn initial_state(&self, y0: &Embedding<T>) -> Result<SolverState<T>> {
        let (n, d) = (self.n(), self.params.d);
        if y0.shape() != (n, d) {
            return Err(Error::mismatch(format!("{n}x{d} embedding"), format!("{:?}", y0.shape())));
        }
        if !y0.is_finite() {
            return Err(Error::NonFinite("initial embedding".into()));
        }
        let e = self.num_edges();
        Ok(SolverState {
            y: y0.clone(),
            p: y0.scale_rows(&self.sqrt_degree),
            b_outer: DenseMatrix::zeros(n, d),
            b_inner: DenseMatrix::zeros(e, d),
            s: DenseMatrix::zeros(e, d),
        })
    }

    /// Right side `(λ/2)Mᵀ(s − b) + (r/2)D^{1/2}(P − B)` of the `Y` update.
    pub fn rhs(&self, st: &SolverState<T>) -> Result<DenseMatrix<T>> {
        let half = T::lit(0.5);
        let (hl, hr) = (half * self.params.lambda, half * self.params.r);
        let q1 = st.s.zip_map(&st.b_inner, |s, b| s - b);
        let mut out = self.mt.spmm_dense(&q1)?;
        for j in 0..out.ncols() {
            let (p, bo) = (st.p.col(j), st.b_outer.col(j));
            for (i, o) in out.col_mut(j).iter_mut().enumerate() {
                *o = hl * *o + hr * self.sqrt_degree[i] * (p[i] - bo[i]);
            }
        }
        Ok(out)
    }

    /// One split Bregman iteration: the PCG `Y` solve (warm-started from the
    /// current `Y`), then `s ← shrink(MY + b, 1/λ)` and `b ← b + MY − s`.
    pub fn sb_step(&self, st: &mut SolverState<T>) -> Result<SbStep<T>> {
        let rhs = self.rhs(st)?;
        let solve = pcg_solve_multi_prepared(&self.normal, &self.pre, &rhs, &st.y, &self.params.pcg)?;
        let mut pcg_iterations = 0;
        let mut pcg_converged = true;
        for (j, rep) in solve.reports.iter().enumerate() {
            match rep {
                Ok(rep) => {
                    pcg_iterations += rep.iterations;
                    if !rep.converged {
                        pcg_converged = false;
                        log::warn!(
                            "PCG column {j} stopped at relative residual {:e} after {} iterations",
                            rep.final_rel_residual,
                            rep.iterations
                        );
                    }
                }
                Err(e) => {
                    return Err(Error::NonFinite(format!("split Bregman Y update, column {j}: {e}")));
                }
            }
        }
        let y_new = solve.x;
        let rel_change = y_new.relative_change(&st.y);
        st.y = y_new;

        let my = self.m.spmm_dense(&st.y)?;
        let gamma = T::one() / self.params.lambda;
        let mb = my.zip_map(&st.b_inner, |a, b| a + b);
        st.s = DenseMatrix::from_col_major(mb.nrows(), mb.ncols(), shrink(mb.as_slice(), gamma))?;
        st.b_inner = mb.zip_map(&st.s, |a, s| a - s);

        if !st.y.is_finite() || !st.s.is_finite() || !st.b_inner.is_finite() {
            return Err(Error::NonFinite("split Bregman iterate".into()));
        }
        Ok(SbStep {
            rel_change,
            pcg_iterations,
            pcg_converged,
        })
    }

    /// Runs split Bregman iterations on `st` (continuing its `b`, `s`) until
    /// the relative change of `Y` drops to `conv_tol` or `sb_max` iterations.
    pub fn split_bregman_continue(&self, st: &mut SolverState<T>, sb_max: usize) -> Result<SbStats> {
        let mut stats = SbStats::default();
        for _ in 0..sb_max {
            let step = self.sb_step(st)?;
            stats.iterations += 1;
            stats.pcg_iterations += step.pcg_iterations;
            if !step.pcg_converged {
                stats.unconverged_solves += 1;
            }
            if step.rel_change <= self.params.conv_tol {
                break;
            }
        }
        Ok(stats)
    }

    /// Approximately solves the `Y` subproblem for fixed `P`, `B`, starting
    /// from zero `b` and `s`.
    pub fn split_bregman(
        &self,
        p: &DenseMatrix<T>,
        b_outer: &DenseMatrix<T>,
        y_init: &Embedding<T>,
        sb_max: usize,
    ) -> Result<Embedding<T>> {
        let mut st = self.initial_state(y_init)?;
        st.p = p.clone();
        st.b_outer = b_outer.clone();
        self.split_bregman_continue(&mut st, sb_max)?;
        Ok(st.y)
    }

    /// One outer iteration: reset `b, s`, run split Bregman, then
    /// `P ← polar(D^{1/2}Y + B)` and `B ← B + D^{1/2}Y − P`.
    /// Returns the split Bregman stats and the relative change of `Y`.
    pub fn soc_step(&self, st: &mut SolverState<T>, sb_max: usize) -> Result<(SbStats, T)> {
        let y_prev = st.y.clone();
        st.reset_inner();
        let stats = self.split_bregman_continue(st, sb_max)?;
        let target = st.y.scale_rows(&self.sqrt_degree).zip_map(&st.b_outer, |a, b| a + b);
        st.p = project_orthogonal(&target)?;
        st.b_outer = target.zip_map(&st.p, |t, p| t - p);
        Ok((stats, st.y.relative_change(&y_prev)))
    }

    fn run_soc(&self, st: &mut SolverState<T>) -> Result<(usize, SbStats)> {
        let mut stats = SbStats::default();
        let mut iterations = 0;
        for _ in 0..self.params.soc_max {
            let (sb, change) = self.soc_step(st, self.params.sb_max_stage1)?;
            stats.absorb(sb);
            iterations += 1;
            log::debug!(
                "SOC {iterations}: {} SB iterations, relative change {:e}, objective {:e}",
                sb.iterations,
                change,
                self.objective(&st.y)
            );
            if change <= self.params.conv_tol {
                break;
            }
        }
        Ok((iterations, stats))
    }

    /// The nested Bregman iteration alone (stage I).
    pub fn soc(&self, y0: &Embedding<T>) -> Result<PfeOutcome<T>> {
        let mut st = self.initial_state(y0)?;
        let (soc_iterations, stage1) = self.run_soc(&mut st)?;
        Ok(PfeOutcome {
            embedding: st.y.clone(),
            state: st,
            soc_iterations,
            stage1,
            stage2: SbStats::default(),
        })
    }

    /// Stage I followed by stage II: split Bregman continued from the stage-I
    /// state with `P` and `B` frozen, for at most `sb_max_stage2` iterations.
    pub fn two_stage(&self, y0: &Embedding<T>) -> Result<PfeOutcome<T>> {
        let mut out = self.soc(y0)?;
        out.stage2 = self.split_bregman_continue(&mut out.state, self.params.sb_max_stage2)?;
        out.embedding = out.state.y.clone();
        Ok(out)
    }
}

/// `Σ_k ‖(MY)_k‖₁ = Σ_{(i,j)∈E} w_ij ‖y_i − y_j‖₁`.
pub fn objective<T: Real>(m: &CsrMatrix<T>, y: &Embedding<T>) -> T {
    let mut buf = vec![T::zero(); m.nrows()];
    let mut total = T::zero();
    for col in y.columns() {
        m.spmv_into(col, &mut buf);
        total += buf.iter().map(|v| v.abs()).sum::<T>();
    }
    total
}

/// Soft thresholding `sign(v)·max(|v| − γ, 0)`, elementwise.
pub fn shrink<T: Real>(v: &[T], gamma: T) -> Vec<T> {
    v.iter()
        .map(|&x| {
            if x > gamma {
                x - gamma
            } else if x < -gamma {
                x + gamma
            } else {
                T::zero()
            }
        })
        .collect()
}

pub fn split_bregman<T: Real>(
    solver: &PfeSolver<T>,
    p: &DenseMatrix<T>,
    b_outer: &DenseMatrix<T>,
    y_init: &Embedding<T>,
    sb_max: usize,
) -> Result<Embedding<T>> {
    solver.split_bregman(p, b_outer, y_init, sb_max)
}

pub fn soc<T: Real>(graph: &WeightedGraph<T>, params: PfeParams<T>, y0: &Embedding<T>) -> Result<Embedding<T>> {
    Ok(PfeSolver::new(graph, params)?.soc(y0)?.embedding)
}

pub fn pfe_two_stage<T: Real>(
    graph: &WeightedGraph<T>,
    params: PfeParams<T>,
    y0: &Embedding<T>,
) -> Result<Embedding<T>> {
    Ok(PfeSolver::new(graph, params)?.two_stage(y0)?.embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_edge(w: f64) -> WeightedGraph<f64> {
        WeightedGraph::from_edges(2, vec![(0, 1, w)]).unwrap()
    }

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(&[2.5], 1.0), vec![1.5]);
        assert_eq!(shrink(&[-0.5], 1.0), vec![0.0]);
        assert_eq!(shrink(&[-3.0], 1.0), vec![-2.0]);
        let v = vec![0.3, -1.2, 0.0, 7.0];
        assert_eq!(shrink(&v, 0.0), v);
    }

    #[test]
    fn objective_examples() {
        let g = single_edge(2.0);
        let m = g.difference_matrix();
        let y = DenseMatrix::from_columns(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(objective(&m, &y), 2.0);
        let flat = DenseMatrix::from_columns(&[vec![4.0, 4.0], vec![-1.0, -1.0]]).unwrap();
        assert_eq!(objective(&m, &flat), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(PfeParams::<f64>::new(3).validate().is_ok());
        let mut p = PfeParams::<f64>::new(0);
        assert!(p.validate().is_err());
        p.d = 2;
        p.lambda = 0.0;
        assert!(p.validate().is_err());
        p.lambda = 1.0;
        p.r = -1.0;
        assert!(p.validate().is_err());
        p.r = 1.0;
        p.sb_max_stage2 = 0;
        assert!(p.validate().is_ok());
        p.soc_max = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn initial_state_shape_checked() {
        let solver = PfeSolver::new(&single_edge(1.0), PfeParams::new(1)).unwrap();
        assert!(solver.initial_state(&DenseMatrix::zeros(3, 1)).is_err());
        let st = solver.initial_state(&DenseMatrix::from_columns(&[vec![1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(st.b_inner.shape(), (1, 1));
        assert_eq!(st.p.col(0), &[1.0, 2.0]);
    }

    #[test]
    fn tiny_lambda_gives_quadratic_minimizer() {
        // with λ → 0 the Y update is D^{-1/2}(P − B)
        let g = WeightedGraph::<f64>::from_edges(3, vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let mut params = PfeParams::new(1);
        params.lambda = 1e-12;
        params.pcg = PcgConfig::with_tol(1e-14);
        let solver = PfeSolver::new(&g, params).unwrap();
        let p = DenseMatrix::from_columns(&[vec![0.3, -0.2, 0.5]]).unwrap();
        let b = DenseMatrix::from_columns(&[vec![0.1, 0.1, -0.1]]).unwrap();
        let y = solver.split_bregman(&p, &b, &DenseMatrix::zeros(3, 1), 1).unwrap();
        for i in 0..3 {
            let expect = (p[(i, 0)] - b[(i, 0)]) / g.degree_vector()[i].sqrt();
            assert!((y[(i, 0)] - expect).abs() < 1e-9, "{i}: {} vs {expect}", y[(i, 0)]);
        }
    }

    #[test]
    fn single_edge_one_iteration_by_hand() {
        // n = 2, d = 1, w = 1: degrees (1, 1), M = [1, -1]
        let (lambda, r) = (4.0, 2.0);
        let mut params = PfeParams::new(1);
        params.lambda = lambda;
        params.r = r;
        params.pcg = PcgConfig::with_tol(1e-15);
        let solver = PfeSolver::new(&single_edge(1.0), params).unwrap();
        let p = DenseMatrix::from_columns(&[vec![0.6, -0.8]]).unwrap();
        let mut st = solver.initial_state(&DenseMatrix::zeros(2, 1)).unwrap();
        st.p = p;
        solver.sb_step(&mut st).unwrap();
        // A = (λ/2)[[1,-1],[-1,1]] + (r/2)I = [[3,-2],[-2,3]], rhs = (r/2)P = (0.6, -0.8)
        // Y = A⁻¹ rhs = (1/5)[[3,2],[2,3]](0.6,-0.8) = (0.04, -0.24)
        let (y0, y1) = (0.04, -0.24);
        assert!((st.y[(0, 0)] - y0).abs() < 1e-14);
        assert!((st.y[(1, 0)] - y1).abs() < 1e-14);
        // MY = 0.28, shrink by 1/λ = 0.25 → s = 0.03, b = 0.25
        assert!((st.s[(0, 0)] - 0.03).abs() < 1e-14);
        assert!((st.b_inner[(0, 0)] - 0.25).abs() < 1e-14);
        // second step: rhs = 2·Mᵀ(s − b) + P = (0.16, -0.36)
        solver.sb_step(&mut st).unwrap();
        let expect = [(3.0 * 0.16 + 2.0 * -0.36) / 5.0, (2.0 * 0.16 + 3.0 * -0.36) / 5.0];
        assert!((st.y[(0, 0)] - expect[0]).abs() < 1e-14);
        assert!((st.y[(1, 0)] - expect[1]).abs() < 1e-14);
    }

    #[test]
    fn two_vertex_soc_satisfies_constraint() {
        let g = single_edge(1.0);
        let solver = PfeSolver::new(&g, PfeParams::new(1)).unwrap();
        let y0 = DenseMatrix::from_columns(&[vec![0.5f64.sqrt(), -(0.5f64.sqrt())]]).unwrap();
        let out = solver.soc(&y0).unwrap();
        let p = &out.state.p;
        assert!((p.tr_matmul(p).unwrap()[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stage_two_with_zero_cap_is_stage_one() {
        let g = WeightedGraph::from_edges(4, vec![(0, 1, 1.0), (1, 2, 0.1), (2, 3, 1.0), (0, 3, 0.2)]).unwrap();
        let mut params = PfeParams::new(2);
        params.sb_max_stage2 = 0;
        let solver = PfeSolver::new(&g, params).unwrap();
        let y0 = DenseMatrix::from_columns(&[vec![0.5, 0.4, -0.3, -0.2], vec![0.1, -0.5, 0.3, 0.2]]).unwrap();
        let one = solver.soc(&y0).unwrap();
        let two = solver.two_stage(&y0).unwrap();
        assert_eq!(one.embedding, two.embedding);
        assert_eq!(two.stage2.iterations, 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let g = WeightedGraph::from_edges(5, vec![(0, 1, 1.0), (1, 2, 0.3), (2, 3, 1.0), (3, 4, 0.7), (0, 4, 0.05)]).unwrap();
        let solver = PfeSolver::new(&g, PfeParams::new(2)).unwrap();
        let y0 = DenseMatrix::from_fn(5, 2, |i, j| ((i * 3 + j * 7) % 5) as f64 * 0.1 - 0.2);
        let a = solver.two_stage(&y0).unwrap().embedding;
        let b = solver.two_stage(&y0).unwrap().embedding;
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn works_in_single_precision() {
        let g = WeightedGraph::<f32>::from_edges(4, vec![(0, 1, 1.0), (1, 2, 0.01), (2, 3, 1.0)]).unwrap();
        let mut params = PfeParams::<f32>::new(1);
        params.pcg.rel_tol = 1e-5;
        let solver = PfeSolver::new(&g, params).unwrap();
        let y0 = DenseMatrix::from_columns(&[vec![0.6f32, 0.4, -0.4, -0.6]]).unwrap();
        let out = solver.two_stage(&y0).unwrap();
        assert!(out.embedding.is_finite());
        let y = out.embedding.col(0);
        assert!(y[0] > 0.0 && y[3] < 0.0);
    }

    proptest! {
        #[test]
        fn shrink_nonexpansive_and_sign_preserving(
            u in prop::collection::vec(-10.0f64..10.0, 1..20),
            gamma in 0.0f64..3.0,
        ) {
            let v: Vec<f64> = u.iter().map(|x| x * 0.5 - 1.0).collect();
            let (su, sv) = (shrink(&u, gamma), shrink(&v, gamma));
            let d_in: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let d_out: f64 = su.iter().zip(&sv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(d_out <= d_in + 1e-12);
            for (x, s) in u.iter().zip(&su) {
                prop_assert!(s.abs() <= x.abs());
                prop_assert!(*s == 0.0 || s.signum() == x.signum());
            }
        }

        #[test]
        fn objective_translation_invariant(
            vals in prop::collection::vec(-1.0f64..1.0, 8),
            shift in prop::collection::vec(-5.0f64..5.0, 2),
        ) {
            let g = WeightedGraph::from_edges(4, vec![(0, 1, 0.5), (1, 2, 1.5), (2, 3, 1.0), (0, 2, 0.25)]).unwrap();
            let m = g.difference_matrix();
            let y = DenseMatrix::from_col_major(4, 2, vals).unwrap();
            let moved = DenseMatrix::from_fn(4, 2, |i, j| y[(i, j)] + shift[j]);
            prop_assert!((objective(&m, &y) - objective(&m, &moved)).abs() < 1e-12);
        }
    }
}
