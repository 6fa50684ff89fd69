//! k-means (Lloyd iterations from k-means++ seeding) over embedding rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-vertex labels in `[0, k)`, optionally laid out as an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    labels: Vec<usize>,
    k: usize,
    layout: Option<(usize, usize)>,
}

impl Segmentation {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&l) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidParameter(format!("label {l} out of range for k = {k}")));
        }
        Ok(Self {
            labels,
            k,
            layout: None,
        })
    }

    /// Takes arbitrary nonnegative labels; `k` is one past the largest.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(labels, k)
    }

    /// Attaches a `height × width` layout. Panics if the size disagrees.
    pub fn with_layout(mut self, height: usize, width: usize) -> Self {
        assert_eq!(height * width, self.labels.len(), "layout does not match label count");
        self.layout = Some((height, width));
        self
    }

    pub fn try_with_layout(self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.labels.len() {
            return Err(Error::mismatch(self.labels.len(), format!("{height}x{width} layout")));
        }
        Ok(self.with_layout(height, width))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layout(&self) -> Option<(usize, usize)> {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    pub segmentation: Segmentation,
    /// `k × d`, one centroid per row.
    pub centroids: DenseMatrix<T>,
    pub inertia: T,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<T>,
    pub iterations: usize,
}

const REL_INERTIA_TOL: f64 = 1e-6;

fn sq_dist<T: Real>(points: &DenseMatrix<T>, i: usize, centroids: &DenseMatrix<T>, c: usize) -> T {
    let mut acc = T::zero();
    for j in 0..points.ncols() {
        let diff = points[(i, j)] - centroids[(c, j)];
        acc += diff * diff;
    }
    acc
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance. When all remaining distances are zero the lowest unused index
/// is taken.
fn seed_centroids<T: Real>(points: &DenseMatrix<T>, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<T> {
    let (n, d) = points.shape();
    let mut centroids = DenseMatrix::zeros(k, d);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    let set = |c: usize, i: usize, centroids: &mut DenseMatrix<T>, chosen: &mut Vec<bool>| {
        for j in 0..d {
            centroids[(c, j)] = points[(i, j)];
        }
        chosen[i] = true;
    };
    set(0, first, &mut centroids, &mut chosen);
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0).to_f64_lossy()).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if w > 0.0 && target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            // rounding can run past the end; step back to a positive weight
            while dist[idx] == 0.0 && idx > 0 {
                idx -= 1;
            }
            idx
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        set(c, pick, &mut centroids, &mut chosen);
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points, i, &centroids, c).to_f64_lossy());
        }
    }
    centroids
}

fn assign<T: Real>(points: &DenseMatrix<T>, centroids: &DenseMatrix<T>, labels: &mut [usize]) -> T {
    let k = centroids.nrows();
    let mut inertia = T::zero();
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (T::infinity(), 0);
        for c in 0..k {
            let dist = sq_dist(points, i, centroids, c);
            if dist < best.0 {
                best = (dist, c);
            }
        }
        *label = best.1;
        inertia += best.0;
    }
    inertia
}

fn update<T: Real>(points: &DenseMatrix<T>, labels: &[usize], centroids: &mut DenseMatrix<T>) -> Vec<usize> {
    let (k, d) = centroids.shape();
    let mut counts = vec![0usize; k];
    let mut sums = DenseMatrix::<T>::zeros(k, d);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..d {
            sums[(l, j)] += points[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = T::one() / T::from_usize_lossy(counts[c]);
            for j in 0..d {
                centroids[(c, j)] = sums[(c, j)] * inv;
            }
        }
    }
    counts
}

/// Moves each empty cluster onto the point of the largest cluster that lies
/// farthest from its centroid.
fn repair_empty<T: Real>(
    points: &DenseMatrix<T>,
    labels: &mut [usize],
    centroids: &mut DenseMatrix<T>,
    counts: &mut [usize],
) -> bool {
    let mut repaired = false;
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let largest = (0..counts.len()).max_by_key(|&c| (counts[c], usize::MAX - c)).unwrap();
        if counts[largest] < 2 {
            break;
        }
        let far = (0..labels.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                sq_dist(points, a, centroids, largest)
                    .partial_cmp(&sq_dist(points, b, centroids, largest))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        for j in 0..points.ncols() {
            centroids[(empty, j)] = points[(far, j)];
        }
        labels[far] = empty;
        counts[largest] -= 1;
        counts[empty] = 1;
        repaired = true;
    }
    repaired
}

/// Clusters the rows of `points` into `k` groups.
pub fn kmeans<T: Real>(points: &DenseMatrix<T>, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult<T>> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds the {n} points")));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    let mut inertia = assign(points, &centroids, &mut labels);
    history.push(inertia);
    let mut iterations = 0;
    let tol = T::lit(REL_INERTIA_TOL);

    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut counts = update(points, &labels, &mut centroids);
        if repair_empty(points, &mut labels, &mut centroids, &mut counts) {
            update(points, &labels, &mut centroids);
        }
        let prev_labels = labels.clone();
        let next = assign(points, &centroids, &mut labels);
        history.push(next);
        let done = labels == prev_labels || (inertia - next).abs() <= tol * inertia.max(T::min_positive_value());
        inertia = next;
        if done {
            break;
        }
    }
    // ties between coincident centroids can empty a cluster in the last assignment
    let mut counts = update(points, &labels, &mut centroids);
    if repair_empty(points, &mut labels, &mut centroids, &mut counts) {
        update(points, &labels, &mut centroids);
        inertia = (0..n).fold(T::zero(), |acc, i| acc + sq_dist(points, i, &centroids, labels[i]));
    }

    Ok(KMeansResult {
        segmentation: Segmentation::new(labels, k)?,
        centroids,
        inertia,
        inertia_history: history,
        iterations,
    })
}
