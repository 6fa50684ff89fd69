//! Weighted undirected graphs, from edge-list files or from 4-neighbour
//! pixel grids, and the matrices derived from them.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgio::RgbImage;
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Heat-kernel weights below this are treated as absent edges.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub w: T,
}

/// Undirected graph with positive weights, each edge stored once with
/// `i < j`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
    degree: Vec<T>,
    sigma: Option<T>,
}

impl<T: Real> WeightedGraph<T> {
    /// Builds a graph from possibly duplicated or reversed edges. Weights of
    /// repeated vertex pairs are summed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (a, b, w) in edges {
            let invalid = |msg: &str| Error::InvalidEdge {
                i: a,
                j: b,
                w: w.to_f64_lossy(),
                msg: msg.to_string(),
            };
            if a >= n || b >= n {
                return Err(invalid("vertex index out of range"));
            }
            if a == b {
                return Err(invalid("self loops are not allowed"));
            }
            if !(w > T::zero()) || !w.is_finite() {
                return Err(invalid("weight must be positive and finite"));
            }
            *merged.entry((a.min(b), a.max(b))).or_insert_with(T::zero) += w;
        }
        let edges: Vec<Edge<T>> = merged.into_iter().map(|((i, j), w)| Edge { i, j, w }).collect();
        Self::from_sorted_edges(n, edges, None)
    }

    fn from_sorted_edges(n: usize, edges: Vec<Edge<T>>, sigma: Option<T>) -> Result<Self> {
        let mut degree = vec![T::zero(); n];
        for e in &edges {
            degree[e.i] += e.w;
            degree[e.j] += e.w;
        }
        if let Some(v) = degree.iter().position(|&d| !(d > T::zero())) {
            return Err(Error::IsolatedVertex(v));
        }
        Ok(Self { n, edges, degree, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Heat-kernel bandwidth the graph was built with, if any.
    pub fn sigma(&self) -> Option<T> {
        self.sigma
    }

    /// `d_i = Σ_j w_ij`.
    pub fn degree_vector(&self) -> &[T] {
        &self.degree
    }

    /// `|E| × n` matrix with row `k` holding `+w_k` at `i_k` and `−w_k` at `j_k`,
    /// so that `‖MY‖₁ = Σ_{(i,j)∈E} w_ij ‖y_i − y_j‖₁`.
    pub fn difference_matrix(&self) -> CsrMatrix<T> {
        let m = self.edges.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut col_idx = Vec::with_capacity(2 * m);
        let mut values = Vec::with_capacity(2 * m);
        row_ptr.push(0);
        for e in &self.edges {
            col_idx.push(e.i);
            values.push(e.w);
            col_idx.push(e.j);
            values.push(-e.w);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix::from_raw_parts(m, self.n, row_ptr, col_idx, values).expect("edges satisfy CSR invariants")
    }

    /// Symmetric weighted adjacency matrix `W`.
    pub fn adjacency(&self) -> CsrMatrix<T> {
        let mut trips = Vec::with_capacity(2 * self.edges.len());
        for e in &self.edges {
            trips.push((e.i, e.j, e.w));
            trips.push((e.j, e.i, e.w));
        }
        CsrMatrix::from_triplets(self.n, self.n, &trips).expect("edge indices in range")
    }
}

pub fn degree_vector<T: Real>(g: &WeightedGraph<T>) -> Vec<T> {
    g.degree_vector().to_vec()
}

pub fn difference_matrix<T: Real>(g: &WeightedGraph<T>) -> CsrMatrix<T> {
    g.difference_matrix()
}

/// Parses the `i j w` edge-list text format. Blank lines and `#` comments are
/// ignored; the vertex count is one more than the largest index.
pub fn parse_edge_list<T: Real>(text: &str, path: &Path) -> Result<WeightedGraph<T>> {
    let mut triples = Vec::new();
    let mut n = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected \"i j w\", found {} fields", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(format!("bad vertex index {:?}: {e}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(format!("bad vertex index {:?}: {e}", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|e| parse_err(format!("bad weight {:?}: {e}", fields[2])))?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(parse_err(format!("weight must be positive, got {w}")));
        }
        if i == j {
            return Err(parse_err(format!("self loop on vertex {i}")));
        }
        n = n.max(i + 1).max(j + 1);
        triples.push((i, j, T::lit(w)));
    }
    WeightedGraph::from_edges(n, triples)
}

pub fn load_edge_list<T: Real>(path: impl AsRef<Path>) -> Result<WeightedGraph<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path)
}

/// Pixel features on a row-major grid; vertex index is `row * width + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid<T> {
    height: usize,
    width: usize,
    features: Vec<[T; 3]>,
}

impl<T: Real> PixelGrid<T> {
    pub fn new(height: usize, width: usize, features: Vec<[T; 3]>) -> Result<Self> {
        if features.len() != height * width {
            return Err(Error::mismatch(height * width, features.len()));
        }
        Ok(Self {
            height,
            width,
            features,
        })
    }

    pub fn from_image(img: &RgbImage) -> Self {
        let features = img
            .pixels()
            .map(|p| [T::lit(p[0]), T::lit(p[1]), T::lit(p[2])])
            .collect();
        Self {
            height: img.height(),
            width: img.width(),
            features,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[[T; 3]] {
        &self.features
    }

    /// 4-neighbour pairs `(p, q)` with `p < q`, in lexicographic order.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let (h, w) = (self.height, self.width);
        let mut pairs = Vec::with_capacity(2 * h * w);
        for r in 0..h {
            for c in 0..w {
                let p = r * w + c;
                if c + 1 < w {
                    pairs.push((p, p + 1));
                }
                if r + 1 < h {
                    pairs.push((p, p + w));
                }
            }
        }
        pairs
    }

    fn sq_dist(&self, p: usize, q: usize) -> T {
        let (a, b) = (&self.features[p], &self.features[q]);
        (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum()
    }

    /// Median Euclidean feature distance over 4-neighbour pairs. A zero median
    /// (mostly flat images) falls back to the median of the nonzero
    /// distances, and a completely flat image to 1.
    pub fn default_sigma(&self) -> T {
        let mut dists: Vec<T> = self
            .neighbor_pairs()
            .into_iter()
            .map(|(p, q)| self.sq_dist(p, q).sqrt())
            .collect();
        let median = |v: &mut Vec<T>| -> Option<T> {
            if v.is_empty() {
                return None;
            }
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            let m = v.len() / 2;
            Some(if v.len() % 2 == 1 {
                v[m]
            } else {
                (v[m - 1] + v[m]) * T::lit(0.5)
            })
        };
        match median(&mut dists) {
            Some(s) if s > T::zero() => s,
            _ => {
                let mut nonzero: Vec<T> = dists.into_iter().filter(|&d| d > T::zero()).collect();
                median(&mut nonzero).unwrap_or_else(T::one)
            }
        }
    }
}

/// 4-neighbour grid graph with heat-kernel weights
/// `w = exp(−‖x_p − x_q‖² / 2σ²)`.
///
/// Weights under [`WEIGHT_FLOOR`] are dropped. A vertex left without edges
/// keeps its strongest neighbour, with the weight raised to the floor.
pub fn build_image_graph<T: Real>(grid: &PixelGrid<T>, sigma: T) -> Result<WeightedGraph<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a {}x{} grid has no neighbour pairs",
            grid.height(),
            grid.width()
        )));
    }
    let n = grid.len();
    let floor = T::lit(WEIGHT_FLOOR);
    let two_sigma_sq = T::lit(2.0) * sigma * sigma;
    let pairs = grid.neighbor_pairs();
    let weights: Vec<T> = pairs
        .iter()
        .map(|&(p, q)| (-grid.sq_dist(p, q) / two_sigma_sq).exp())
        .collect();

    let mut keep: Vec<bool> = weights.iter().map(|&w| w >= floor).collect();
    let mut has_edge = vec![false; n];
    for (k, &(p, q)) in pairs.iter().enumerate() {
        if keep[k] {
            has_edge[p] = true;
            has_edge[q] = true;
        }
    }
    if has_edge.iter().any(|&h| !h) {
        // strongest incident pair per isolated vertex, first in order on ties
        let mut best: Vec<Option<usize>> = vec![None; n];
        for (k, &(p, q)) in pairs.iter().enumerate() {
            for v in [p, q] {
                if !has_edge[v] && best[v].is_none_or(|b| weights[k] > weights[b]) {
                    best[v] = Some(k);
                }
            }
        }
        for k in best.into_iter().flatten() {
            keep[k] = true;
        }
    }

    let edges: Vec<Edge<T>> = pairs
        .iter()
        .zip(&weights)
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((&(i, j), &w), _)| Edge { i, j, w: w.max(floor) })
        .collect();
    WeightedGraph::from_sorted_edges(n, edges, Some(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<WeightedGraph<f64>> {
        parse_edge_list(text, &PathBuf::from("mem"))
    }

    #[test]
    fn single_edge_file() {
        let g = parse("0 1 1.0\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.degree_vector(), &[1.0, 1.0]);
    }

    #[test]
    fn reversed_edges_merge() {
        let g = parse("# comment\n0 1 0.5\n\n1 0 0.5 # trailing\n").unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 1.0 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("0 1 1\n0 x 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1 -1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("0 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn isolated_vertex_rejected() {
        assert!(matches!(
            WeightedGraph::from_edges(3, vec![(0, 1, 1.0)]),
            Err(Error::IsolatedVertex(2))
        ));
    }

    #[test]
    fn difference_matrix_small() {
        let g = WeightedGraph::from_edges(2, vec![(0, 1, 2.0)]).unwrap();
        assert_eq!(g.difference_matrix().to_dense().row(0), vec![2.0, -2.0]);
        let path = WeightedGraph::from_edges(3, vec![(1, 2, 1.0), (0, 1, 1.0)]).unwrap();
        let m = path.difference_matrix().to_dense();
        assert_eq!(m.row(0), vec![1.0, -1.0, 0.0]);
        assert_eq!(m.row(1), vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn degree_small() {
        let g = WeightedGraph::from_edges(2, vec![(0, 1, 3.0)]).unwrap();
        assert_eq!(degree_vector(&g), vec![3.0, 3.0]);
        let tri = WeightedGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(degree_vector(&tri), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn heat_kernel_values() {
        let same = PixelGrid::new(1, 2, vec![[0.2, 0.4, 0.6]; 2]).unwrap();
        assert_eq!(build_image_graph(&same, 0.3).unwrap().edges()[0].w, 1.0);
        // ‖Δx‖² = 2σ² gives e⁻¹
        let sigma = 0.5f64;
        let dx = (2.0 * sigma * sigma).sqrt();
        let g = PixelGrid::new(1, 2, vec![[0.0, 0.0, 0.0], [dx, 0.0, 0.0]]).unwrap();
        let w = build_image_graph(&g, sigma).unwrap().edges()[0].w;
        assert!((w - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_grid_and_sigma() {
        let one = PixelGrid::new(1, 1, vec![[0.0; 3]]).unwrap();
        assert!(build_image_graph(&one, 1.0).is_err());
        let two = PixelGrid::new(1, 2, vec![[0.0; 3]; 2]).unwrap();
        assert!(build_image_graph(&two, 0.0).is_err());
    }

    #[test]
    fn underflowed_vertex_keeps_strongest_edge() {
        // vertex 2 is far from both neighbours on a 1x3 strip
        let g = PixelGrid::new(1, 3, vec![[0.0; 3], [0.0; 3], [1.0, 1.0, 1.0]]).unwrap();
        let graph = build_image_graph(&g, 0.01).unwrap();
        assert_eq!(graph.num_edges(), 2);
        assert_eq!(graph.edges()[1].w, WEIGHT_FLOOR);
        assert!(graph.degree_vector().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn interior_pixels_have_four_edges() {
        let feats: Vec<[f64; 3]> = (0..20).map(|k| [k as f64 * 0.01, 0.0, 0.0]).collect();
        let grid = PixelGrid::new(4, 5, feats).unwrap();
        let g = build_image_graph(&grid, 1.0).unwrap();
        assert_eq!(g.num_edges(), 4 * 4 + 3 * 5);
        let mut count = [0; 20];
        for e in g.edges() {
            count[e.i] += 1;
            count[e.j] += 1;
        }
        for r in 1..3 {
            for c in 1..4 {
                assert_eq!(count[r * 5 + c], 4);
            }
        }
    }

    #[test]
    fn default_sigma_fallbacks() {
        let flat = PixelGrid::new(2, 2, vec![[0.5; 3]; 4]).unwrap();
        assert_eq!(flat.default_sigma(), 1.0);
        // one of three neighbour distances is nonzero
        let g = PixelGrid::new(1, 4, vec![[0.0; 3], [0.0; 3], [0.0; 3], [0.3, 0.0, 0.0]]).unwrap();
        assert!((g.default_sigma() - 0.3f64).abs() < 1e-15);
    }
}
