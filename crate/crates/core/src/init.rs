//! Starting embeddings: diagonal-covariance Gaussian mixture responsibilities,
//! orthonormalized in the degree-weighted inner product so that `YᵀDY = I`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cluster::kmeans;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const EM_MAX_ITER: usize = 50;
pub const EM_TOL: f64 = 1e-7;
const MAX_REPAIRS: usize = 5;
/// Components with less total responsibility than this are considered empty.
const EMPTY_MASS: f64 = 1e-8;
const PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel<T> {
    pub means: Vec<[T; 3]>,
    pub variances: Vec<[T; 3]>,
    pub weights: Vec<T>,
    /// Mean per-point log-likelihood at the final EM iteration.
    pub log_likelihood: T,
    pub iterations: usize,
}

impl<T: Real> GmmModel<T> {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    fn log_density(&self, c: usize, x: &[T; 3]) -> T {
        let ln_2pi = T::lit((2.0 * std::f64::consts::PI).ln());
        let mut acc = self.weights[c].ln();
        for ch in 0..3 {
            let var = self.variances[c][ch];
            let diff = x[ch] - self.means[c][ch];
            acc -= T::lit(0.5) * (ln_2pi + var.ln() + diff * diff / var);
        }
        acc
    }

    /// Posterior component probabilities, one row per point; returns the mean
    /// log-likelihood alongside.
    pub fn responsibilities_with_ll(&self, features: &[[T; 3]]) -> (DenseMatrix<T>, T) {
        let (n, k) = (features.len(), self.k());
        let mut resp = DenseMatrix::zeros(n, k);
        let mut ll = T::zero();
        let mut logs = vec![T::zero(); k];
        for (i, x) in features.iter().enumerate() {
            for (c, l) in logs.iter_mut().enumerate() {
                *l = self.log_density(c, x);
            }
            let mx = logs.iter().copied().fold(T::neg_infinity(), T::max);
            let sum: T = logs.iter().map(|&l| (l - mx).exp()).sum();
            let lse = mx + sum.ln();
            ll += lse;
            for c in 0..k {
                resp[(i, c)] = (logs[c] - lse).exp();
            }
        }
        (resp, ll / T::from_usize_lossy(n.max(1)))
    }

    pub fn responsibilities(&self, features: &[[T; 3]]) -> DenseMatrix<T> {
        self.responsibilities_with_ll(features).0
    }
}

fn m_step<T: Real>(features: &[[T; 3]], resp: &DenseMatrix<T>, floor: T) -> (GmmModel<T>, Vec<T>) {
    let (n, k) = resp.shape();
    let mut means = vec![[T::zero(); 3]; k];
    let mut variances = vec![[floor; 3]; k];
    let mut mass = vec![T::zero(); k];
    for c in 0..k {
        let col = resp.col(c);
        let nk: T = col.iter().copied().sum();
        mass[c] = nk;
        if nk <= T::zero() {
            continue;
        }
        for ch in 0..3 {
            let mean = col.iter().zip(features).map(|(&r, x)| r * x[ch]).sum::<T>() / nk;
            let var = col
                .iter()
                .zip(features)
                .map(|(&r, x)| r * (x[ch] - mean) * (x[ch] - mean))
                .sum::<T>()
                / nk;
            means[c][ch] = mean;
            variances[c][ch] = var.max(floor);
        }
    }
    let total = T::from_usize_lossy(n);
    let weights = mass.iter().map(|&m| m / total).collect();
    (
        GmmModel {
            means,
            variances,
            weights,
            log_likelihood: T::neg_infinity(),
            iterations: 0,
        },
        mass,
    )
}

/// Fits a `k`-component diagonal GMM by EM, seeded from k-means.
///
/// A component whose responsibility mass vanishes is re-seeded at the point
/// with the lowest likelihood under the current model, at most five times.
pub fn gmm_fit<T: Real>(features: &[[T; 3]], k: usize, seed: u64) -> Result<GmmModel<T>> {
    let n = features.len();
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("GMM needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GMM features".into()));
    }
    let floor = T::lit(VARIANCE_FLOOR);
    let pts = DenseMatrix::from_fn(n, 3, |i, j| features[i][j]);
    let km = kmeans(&pts, k, seed, 100)?;
    let mut hard = DenseMatrix::zeros(n, k);
    for (i, &l) in km.segmentation.labels().iter().enumerate() {
        hard[(i, l)] = T::one();
    }
    let (mut model, _) = m_step(features, &hard, floor);

    let mut repairs = 0;
    let mut prev_ll = T::neg_infinity();
    for it in 1..=EM_MAX_ITER {
        let (resp, ll) = model.responsibilities_with_ll(features);
        let (mut next, mass) = m_step(features, &resp, floor);
        let empty = mass.iter().position(|&m| m < T::lit(EMPTY_MASS));
        next.log_likelihood = ll;
        next.iterations = it;
        if let Some(c) = empty {
            if repairs == MAX_REPAIRS {
                return Err(Error::InvalidParameter(format!(
                    "GMM component {c} stayed empty after {MAX_REPAIRS} repairs"
                )));
            }
            repairs += 1;
            let worst = (0..n)
                .min_by(|&a, &b| {
                    let la = point_log_likelihood(&model, &features[a]);
                    let lb = point_log_likelihood(&model, &features[b]);
                    la.partial_cmp(&lb).unwrap().then(a.cmp(&b))
                })
                .unwrap();
            log::debug!("re-seeding empty GMM component {c} at point {worst}");
            next.means[c] = features[worst];
            next.variances[c] = model.variances.iter().fold([floor; 3], |acc, v| {
                [acc[0].max(v[0]), acc[1].max(v[1]), acc[2].max(v[2])]
            });
            next.weights[c] = T::one() / T::from_usize_lossy(n);
            let total: T = next.weights.iter().copied().sum();
            for w in &mut next.weights {
                *w /= total;
            }
            model = next;
            prev_ll = T::neg_infinity();
            continue;
        }
        model = next;
        if (ll - prev_ll).abs() <= T::lit(EM_TOL) {
            break;
        }
        prev_ll = ll;
    }
    Ok(model)
}

fn point_log_likelihood<T: Real>(model: &GmmModel<T>, x: &[T; 3]) -> T {
    let logs: Vec<T> = (0..model.k()).map(|c| model.log_density(c, x)).collect();
    let mx = logs.iter().copied().fold(T::neg_infinity(), T::max);
    mx + logs.iter().map(|&l| (l - mx).exp()).sum::<T>().ln()
}

/// Modified Gram–Schmidt in the inner product `⟨u, v⟩ = Σ dᵢ uᵢ vᵢ`, with one
/// reorthogonalization pass. Fails on a column whose remaining norm is below
/// `1e-10` of its original norm.
pub fn d_orthonormalize<T: Real>(y: &DenseMatrix<T>, degree: &[T]) -> Result<DenseMatrix<T>> {
    let (n, d) = y.shape();
    if degree.len() != n {
        return Err(Error::mismatch(n, degree.len()));
    }
    let inner = |a: &[T], b: &[T]| -> T { a.iter().zip(b).zip(degree).map(|((&x, &y), &w)| w * x * y).sum() };
    let mut q = y.clone();
    let mut deficient = 0;
    for j in 0..d {
        let orig = inner(q.col(j), q.col(j)).sqrt();
        let mut v = q.col(j).to_vec();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let coef = inner(qi, &v);
                for (vk, &qk) in v.iter_mut().zip(qi) {
                    *vk -= coef * qk;
                }
            }
        }
        let norm = inner(&v, &v).sqrt();
        if !(norm > T::lit(1e-10) * orig) || !(norm > T::zero()) {
            deficient += 1;
            continue;
        }
        for (dst, &vk) in q.col_mut(j).iter_mut().zip(&v) {
            *dst = vk / norm;
        }
    }
    if deficient > 0 {
        return Err(Error::RankDeficient { deficient, cols: d });
    }
    Ok(q)
}

/// Starting embedding: responsibility columns, `D`-orthonormalized. A
/// rank-deficient responsibility matrix is perturbed with `1e-6` Gaussian
/// noise and retried once.
pub fn init_embedding<T: Real>(
    model: &GmmModel<T>,
    features: &[[T; 3]],
    degree: &[T],
    seed: u64,
) -> Result<DenseMatrix<T>> {
    if features.len() != degree.len() {
        return Err(Error::mismatch(degree.len(), features.len()));
    }
    let resp = model.responsibilities(features);
    match d_orthonormalize(&resp, degree) {
        Ok(y) => Ok(y),
        Err(Error::RankDeficient { deficient, .. }) => {
            log::debug!("responsibilities rank deficient by {deficient}, perturbing");
            let perturbed = perturb(&resp, seed);
            d_orthonormalize(&perturbed, degree)
        }
        Err(e) => Err(e),
    }
}

fn perturb<T: Real>(m: &DenseMatrix<T>, seed: u64) -> DenseMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = T::lit(PERTURBATION);
    let (n, d) = m.shape();
    DenseMatrix::from_fn(n, d, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        m[(i, j)] + noise * T::lit(z)
    })
}

/// Gaussian random starting embedding, `D`-orthonormalized; used when no
/// vertex features exist (edge-list input).
pub fn random_embedding<T: Real>(n: usize, d: usize, degree: &[T], seed: u64) -> Result<DenseMatrix<T>> {
    if d > n {
        return Err(Error::InvalidParameter(format!("dimension {d} exceeds vertex count {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = DenseMatrix::from_fn(n, d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::lit(z)
    });
    d_orthonormalize(&y, degree)
}
