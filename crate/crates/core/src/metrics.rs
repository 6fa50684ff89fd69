//! Region-based segmentation scores: covering, probabilistic Rand index and
//! variation of information (natural log).

use std::collections::HashMap;

use crate::cluster::Segmentation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub covering: f64,
    pub pri: f64,
    pub vi: f64,
}

/// Joint label histogram of two labelings over the same points.
struct Contingency {
    n: usize,
    a_sizes: Vec<u64>,
    b_sizes: Vec<u64>,
    /// `((a, b), count)` for every nonzero cell, sorted by `(a, b)`.
    cells: Vec<((usize, usize), u64)>,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

impl Contingency {
    fn new(a: &Segmentation, b: &Segmentation) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::mismatch(format!("{} labels", a.len()), format!("{} labels", b.len())));
        }
        let (la, ka) = compact(a.labels());
        let (lb, kb) = compact(b.labels());
        let mut a_sizes = vec![0u64; ka];
        let mut b_sizes = vec![0u64; kb];
        let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
        for (&x, &y) in la.iter().zip(&lb) {
            a_sizes[x] += 1;
            b_sizes[y] += 1;
            *joint.entry((x, y)).or_insert(0) += 1;
        }
        let mut cells: Vec<_> = joint.into_iter().collect();
        cells.sort_unstable();
        Ok(Self {
            n: a.len(),
            a_sizes,
            b_sizes,
            cells,
        })
    }
}

fn pairs(c: u64) -> f64 {
    (c as f64) * (c.saturating_sub(1) as f64) / 2.0
}

/// Entropy (nats) of a histogram with total `n`. Counts are summed in sorted
/// order so the value does not depend on how labels were numbered.
fn entropy(counts: impl Iterator<Item = u64>, n: usize) -> f64 {
    let mut c: Vec<u64> = counts.filter(|&c| c > 0).collect();
    c.sort_unstable();
    let n = n as f64;
    c.into_iter()
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Covering of `gt` by `pred`: `(1/n) Σ_{R∈gt} |R| max_{R'∈pred} IoU(R, R')`.
pub fn covering(pred: &Segmentation, gt: &Segmentation) -> Result<f64> {
    let t = Contingency::new(gt, pred)?;
    if t.n == 0 {
        return Err(Error::InvalidParameter("empty segmentation".into()));
    }
    let mut best = vec![0.0f64; t.a_sizes.len()];
    for &((g, p), inter) in &t.cells {
        let union = t.a_sizes[g] + t.b_sizes[p] - inter;
        let iou = inter as f64 / union as f64;
        if iou > best[g] {
            best[g] = iou;
        }
    }
    let total: f64 = t
        .a_sizes
        .iter()
        .zip(&best)
        .map(|(&size, &iou)| size as f64 * iou)
        .sum();
    Ok(total / t.n as f64)
}

/// Rand index: fraction of point pairs on which both labelings agree about
/// being together or apart. A single point counts as full agreement.
pub fn rand_index(a: &Segmentation, b: &Segmentation) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let total = pairs(t.n as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let same_a: f64 = t.a_sizes.iter().map(|&c| pairs(c)).sum();
    let same_b: f64 = t.b_sizes.iter().map(|&c| pairs(c)).sum();
    let same_both: f64 = t.cells.iter().map(|&(_, c)| pairs(c)).sum();
    let disagree = same_a + same_b - 2.0 * same_both;
    Ok(1.0 - disagree / total)
}

/// Probabilistic Rand index: mean Rand index over the ground truths.
pub fn pri(pred: &Segmentation, gts: &[Segmentation]) -> Result<f64> {
    if gts.is_empty() {
        return Err(Error::InvalidParameter("no ground-truth segmentations".into()));
    }
    let mut sum = 0.0;
    for gt in gts {
        sum += rand_index(pred, gt)?;
    }
    Ok(sum / gts.len() as f64)
}

/// Variation of information `H(a|b) + H(b|a) = 2H(a,b) − H(a) − H(b)`.
pub fn voi(a: &Segmentation, b: &Segmentation) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let joint = entropy(t.cells.iter().map(|&(_, c)| c), t.n);
    let ha = entropy(t.a_sizes.iter().copied(), t.n);
    let hb = entropy(t.b_sizes.iter().copied(), t.n);
    Ok((2.0 * joint - (ha + hb)).max(0.0))
}

/// Covering and VI averaged over the ground truths, PRI as defined above.
pub fn evaluate(pred: &Segmentation, gts: &[Segmentation]) -> Result<MetricsReport> {
    if gts.is_empty() {
        return Err(Error::InvalidParameter("no ground-truth segmentations".into()));
    }
    let mut cov = 0.0;
    let mut vi = 0.0;
    for gt in gts {
        cov += covering(pred, gt)?;
        vi += voi(pred, gt)?;
    }
    let m = gts.len() as f64;
    Ok(MetricsReport {
        covering: cov / m,
        pri: pri(pred, gts)?,
        vi: vi / m,
    })
}
