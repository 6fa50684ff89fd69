#![allow(dead_code)]

use nalgebra::DMatrix;
use pfe_core::{DenseMatrix, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected random graph: a random spanning path plus `extra` chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> WeightedGraph<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for w in order.windows(2) {
        edges.push((w[0], w[1], rng.random_range(0.05..2.0)));
    }
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges.push((i, j, rng.random_range(0.05..2.0)));
        }
    }
    WeightedGraph::from_edges(n, edges).unwrap()
}

pub fn random_dense(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(nrows, ncols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

pub fn sparse_to_na(m: &pfe_core::CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out[(i, j)] += v;
        }
    }
    out
}

/// Connected 4-neighbour grid graph with random positive weights.
pub fn grid_graph(rng: &mut ChaCha8Rng, h: usize, w: usize) -> WeightedGraph<f64> {
    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                edges.push((i, i + 1, rng.random_range(0.01..1.0)));
            }
            if r + 1 < h {
                edges.push((i, i + w, rng.random_range(0.01..1.0)));
            }
        }
    }
    WeightedGraph::from_edges(h * w, edges).unwrap()
}
