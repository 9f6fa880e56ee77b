//! Candidate filtering: realism and boundary-utility heads, optional
//! uncertainty and density heads, score fusion with threshold and
//! diversity-regularized Top-K selection, a PCA front-end for
//! high-dimensional inputs, and the discriminator / smoothness diagnostics.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::format_real;
use crate::error::{Error, Result};
use crate::linalg::{dot, euclidean, squared_distance, Matrix};
use crate::models::{fit_stump_boost, ProbClassifier, StumpBoostModel};
use crate::rng::{derive_seed, rng_from};
use crate::samplers::CandidateSet;
use crate::Float;
use rand::seq::SliceRandom;

/// Boosting rounds for the realism discriminator.
pub const DISCRIMINATOR_ROUNDS: usize = 200;
/// Learning rate for the realism discriminator.
pub const DISCRIMINATOR_RATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Whether filtering runs at all; baselines keep every candidate.
    pub enabled: bool,
    /// Utility-vs-realism weight in the fused score.
    pub lambda: f64,
    /// Retention threshold on the fused score.
    pub tau: f64,
    /// Utility sharpness: `s_util = 1 - sigmoid(alpha * d)`.
    pub alpha: f64,
    /// Realism level defining the discriminator false-positive diagnostic.
    pub eta: f64,
    pub top_k: Option<usize>,
    pub diversity_enabled: bool,
    /// Optional 4-head fusion (realism, utility, uncertainty, density);
    /// when disabled the fused score is exactly
    /// `lambda * s_util + (1 - lambda) * s_real`.
    pub extended_fusion: bool,
    pub head_weights: [f64; 4],
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            enabled: true,
            lambda: 0.5,
            tau: 0.8,
            alpha: 4.0,
            eta: 0.5,
            top_k: None,
            diversity_enabled: false,
            extended_fusion: false,
            head_weights: [0.25; 4],
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("tau", self.tau), ("eta", self.eta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0,1]")));
            }
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if self.extended_fusion {
            let sum: f64 = self.head_weights.iter().sum();
            if self.head_weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(
                    "head_weights must be nonnegative and sum to 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-candidate head scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateHeads<F> {
    pub s_real: Vec<F>,
    pub s_util: Vec<F>,
    pub s_unc: Vec<F>,
    pub s_den: Vec<F>,
}

/// One scored candidate; `index` refers to the candidate set row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate<F> {
    pub index: usize,
    pub s_real: F,
    pub s_util: F,
    pub s_unc: F,
    pub s_den: F,
    pub fused: F,
    pub retained: bool,
}

/// All candidates with their scores and retention flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSet<F> {
    pub candidates: Vec<ScoredCandidate<F>>,
}

impl<F: Float> FilteredSet<F> {
    pub fn retained_indices(&self) -> Vec<usize> {
        self.candidates
            .iter()
            .filter(|c| c.retained)
            .map(|c| c.index)
            .collect()
    }

    pub fn n_retained(&self) -> usize {
        self.candidates.iter().filter(|c| c.retained).count()
    }

    /// CSV with columns `index, s_real, s_util, s_unc, s_den, fused, retained`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "index,s_real,s_util,s_unc,s_den,fused,retained")?;
        for c in &self.candidates {
            writeln!(
                file,
                "{},{},{},{},{},{},{}",
                c.index,
                format_real(c.s_real),
                format_real(c.s_util),
                format_real(c.s_unc),
                format_real(c.s_den),
                format_real(c.fused),
                u8::from(c.retained)
            )?;
        }
        Ok(())
    }
}

/// A discriminator trained to tell real minority rows (label 1) from
/// synthetic candidates (label 0), with its 20% stratified holdout.
#[derive(Debug, Clone)]
pub struct Discriminator<F> {
    pub model: StumpBoostModel<F>,
    pub holdout_real: Matrix<F>,
    pub holdout_synthetic: Matrix<F>,
}

/// Trains the realism discriminator on a stratified 80% split of
/// (real minority, candidates); the remaining 20% is held out for
/// [`estimate_epsilon`].
pub fn train_discriminator<F: Float>(
    real_minority: &Matrix<F>,
    candidates: &CandidateSet<F>,
    seed: u64,
) -> Result<Discriminator<F>> {
    let n_real = real_minority.n_rows();
    let n_synth = candidates.len();
    let needed = 5;
    if n_real < needed || n_synth < needed {
        return Err(Error::TooFewSamples {
            needed,
            found: n_real.min(n_synth),
        });
    }

    // both sides shuffle on identically seeded streams, so equal-sized
    // identical inputs hold out matching rows
    let split = |n: usize| -> (Vec<usize>, Vec<usize>) {
        let mut rng = rng_from(derive_seed(seed, 10));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let cut = ((n as f64) * 0.8).round() as usize;
        let cut = cut.clamp(1, n - 1);
        (idx[..cut].to_vec(), idx[cut..].to_vec())
    };
    let (real_train, real_hold) = split(n_real);
    let (synth_train, synth_hold) = split(n_synth);

    let mut x = real_minority.select_rows(&real_train);
    let synth_train_m = candidates.points.select_rows(&synth_train);
    x = x.vstack(&synth_train_m);
    let mut y = vec![1u8; real_train.len()];
    y.extend(vec![0u8; synth_train.len()]);

    let model = fit_stump_boost(
        &x,
        &y,
        DISCRIMINATOR_ROUNDS,
        F::cast(DISCRIMINATOR_RATE),
        derive_seed(seed, 1),
        None,
    )?;
    Ok(Discriminator {
        model,
        holdout_real: real_minority.select_rows(&real_hold),
        holdout_synthetic: candidates.points.select_rows(&synth_hold),
    })
}

/// Discriminator probability that each point is real minority. The model
/// output is already the logistic transform of its raw score, so it is used
/// directly (no second squashing).
pub fn realism_score<F: Float, C: ProbClassifier<F>>(
    discriminator: &C,
    points: &Matrix<F>,
) -> Result<Vec<F>> {
    discriminator.predict_proba(points)
}

/// Probability-space surrogate of the distance to the decision boundary:
/// `d = |p_hat - t|`, bounded by `max(t, 1-t)`.
pub fn boundary_distance<F: Float>(p_hat: &[F], t: F) -> Vec<F> {
    p_hat.iter().map(|&p| (p - t).abs()).collect()
}

/// Boundary-utility head `1 - sigmoid(alpha * d)`: 0.5 on the boundary,
/// strictly decreasing in the distance.
pub fn utility_score<F: Float>(distances: &[F], alpha: F) -> Vec<F> {
    distances
        .iter()
        .map(|&d| F::one() - crate::models::sigmoid(alpha * d))
        .collect()
}

/// Uncertainty head: binary entropy of `p_hat` normalized to [0,1], maximal
/// at one half and 0 at the endpoints (by continuity).
pub fn uncertainty_score<F: Float>(p_hat: &[F]) -> Vec<F> {
    let ln2 = F::cast(std::f64::consts::LN_2);
    p_hat
        .iter()
        .map(|&p| {
            if p <= F::zero() || p >= F::one() {
                return F::zero();
            }
            let q = F::one() - p;
            (-(p * p.ln()) - q * q.ln()) / ln2
        })
        .collect()
}

/// Density head: `exp(-r / r_bar)` where `r` is the mean distance from the
/// candidate to its k nearest real-minority points and `r_bar` is the median
/// of the same quantity over the real minority itself (self excluded).
pub fn density_score<F: Float>(
    candidates: &Matrix<F>,
    real_minority: &Matrix<F>,
    k: usize,
) -> Result<Vec<F>> {
    let n_real = real_minority.n_rows();
    if k > n_real {
        return Err(Error::KTooLarge {
            k,
            available: n_real,
        });
    }
    let mean_knn_dist = |query: &[F], exclude: Option<usize>, kk: usize| -> F {
        let mut dists: Vec<F> = (0..n_real)
            .filter(|&i| Some(i) != exclude)
            .map(|i| squared_distance(real_minority.row(i), query))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sum: F = dists.iter().take(kk).map(|&d| d.sqrt()).sum();
        sum / F::cast(kk as f64)
    };

    // reference scale: median over real minority, self excluded
    let k_ref = k.min(n_real.saturating_sub(1)).max(1);
    let mut ref_dists: Vec<F> = (0..n_real)
        .map(|i| {
            if n_real == 1 {
                F::zero()
            } else {
                mean_knn_dist(real_minority.row(i), Some(i), k_ref)
            }
        })
        .collect();
    ref_dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r_bar = median_of_sorted(&ref_dists);

    Ok((0..candidates.n_rows())
        .map(|i| {
            let r = mean_knn_dist(candidates.row(i), None, k);
            if r_bar <= F::zero() {
                if r <= F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            } else {
                (-(r / r_bar)).exp()
            }
        })
        .collect())
}

fn median_of_sorted<F: Float>(sorted: &[F]) -> F {
    let n = sorted.len();
    if n == 0 {
        return F::zero();
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / F::cast(2.0)
    }
}

/// Fuses head scores and selects the retained subset.
///
/// The base rule keeps candidates with fused score at least `tau`
/// (inclusive). When `top_k` caps a larger base set, selection is plain
/// Top-K by score, or, with diversity enabled, greedy farthest-point
/// selection seeded by the best-scoring candidate that repeatedly adds
/// `argmax [S + gamma * min-distance-to-selected]` with
/// `gamma = 0.1 * range(S)` over the base set. Ties always break toward
/// the lower candidate index.
pub fn fuse_and_select<F: Float>(
    heads: &CandidateHeads<F>,
    points: &Matrix<F>,
    config: &FilterConfig,
) -> Result<FilteredSet<F>> {
    config.validate()?;
    let n = heads.s_real.len();
    if heads.s_util.len() != n || heads.s_unc.len() != n || heads.s_den.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: heads.s_util.len(),
        });
    }
    let lambda = F::cast(config.lambda);
    let one = F::one();
    let fused: Vec<F> = if config.extended_fusion {
        let w: Vec<F> = config.head_weights.iter().map(|&v| F::cast(v)).collect();
        (0..n)
            .map(|i| {
                w[0] * heads.s_real[i]
                    + w[1] * heads.s_util[i]
                    + w[2] * heads.s_unc[i]
                    + w[3] * heads.s_den[i]
            })
            .collect()
    } else {
        (0..n)
            .map(|i| lambda * heads.s_util[i] + (one - lambda) * heads.s_real[i])
            .collect()
    };

    let tau = F::cast(config.tau);
    let base: Vec<usize> = (0..n).filter(|&i| fused[i] >= tau).collect();

    let selected: Vec<usize> = match config.top_k {
        Some(k) if base.len() > k => {
            if config.diversity_enabled {
                greedy_diverse(&base, &fused, points, k)
            } else {
                let mut by_score = base.clone();
                by_score.sort_by(|&a, &b| {
                    fused[b].partial_cmp(&fused[a]).unwrap().then(a.cmp(&b))
                });
                by_score.truncate(k);
                by_score
            }
        }
        _ => base,
    };

    let mut retained = vec![false; n];
    for &i in &selected {
        retained[i] = true;
    }
    Ok(FilteredSet {
        candidates: (0..n)
            .map(|i| ScoredCandidate {
                index: i,
                s_real: heads.s_real[i],
                s_util: heads.s_util[i],
                s_unc: heads.s_unc[i],
                s_den: heads.s_den[i],
                fused: fused[i],
                retained: retained[i],
            })
            .collect(),
    })
}

fn greedy_diverse<F: Float>(pool: &[usize], fused: &[F], points: &Matrix<F>, k: usize) -> Vec<usize> {
    let mut lo = fused[pool[0]];
    let mut hi = fused[pool[0]];
    for &i in pool {
        if fused[i] < lo {
            lo = fused[i];
        }
        if fused[i] > hi {
            hi = fused[i];
        }
    }
    let gamma = F::cast(0.1) * (hi - lo);

    let first = pool
        .iter()
        .copied()
        .max_by(|&a, &b| fused[a].partial_cmp(&fused[b]).unwrap().then(b.cmp(&a)))
        .expect("pool is non-empty");
    let mut selected = vec![first];
    let mut remaining: Vec<usize> = pool.iter().copied().filter(|&i| i != first).collect();

    while selected.len() < k && !remaining.is_empty() {
        let mut best_pos = 0;
        let mut best_score = F::neg_infinity();
        for (pos, &i) in remaining.iter().enumerate() {
            let min_dist = selected
                .iter()
                .map(|&j| euclidean(points.row(i), points.row(j)))
                .fold(F::infinity(), |acc, d| if d < acc { d } else { acc });
            let score = fused[i] + gamma * min_dist;
            if score > best_score {
                best_score = score;
                best_pos = pos;
            }
        }
        selected.push(remaining.remove(best_pos));
    }
    selected
}

// ---------------------------------------------------------------------------
// PCA front-end
// ---------------------------------------------------------------------------

/// Principal-component projection fitted by power iteration with deflation.
#[derive(Debug, Clone, PartialEq)]
pub struct PCAProjection<F> {
    pub mean: Vec<F>,
    /// `d x r` matrix whose columns are orthonormal components.
    pub components: Matrix<F>,
    /// Non-increasing explained variances of the kept components.
    pub explained_variance: Vec<F>,
    pub requested_dim: usize,
    /// Fewer than `requested_dim` nonzero eigenvalues were found; the
    /// achievable rank was returned instead.
    pub rank_deficient: bool,
}

/// Iteration cap for one power-iteration eigenpair.
pub const PCA_MAX_ITER: usize = 10_000;

/// Fits the top `r` principal components of the sample covariance.
pub fn pca_fit<F: Float>(features: &Matrix<F>, r: usize) -> Result<PCAProjection<F>> {
    let n = features.n_rows();
    let d = features.n_cols();
    if n < 2 {
        return Err(Error::InvalidConfig("pca needs at least 2 rows".into()));
    }
    if r > d || r == 0 {
        return Err(Error::InvalidConfig(format!(
            "target dimension {r} must lie in 1..={d}"
        )));
    }

    let mean: Vec<F> = (0..d)
        .map(|j| features.column(j).into_iter().sum::<F>() / F::cast(n as f64))
        .collect();
    // covariance, built once; deflated in place per extracted component
    let mut cov = Matrix::zeros(d, d);
    for row in features.iter_rows() {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                let v = cov.get(a, b) + da * (row[b] - mean[b]);
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
    }
    let denom = F::cast((n - 1) as f64);
    for a in 0..d {
        for b in 0..d {
            let v = cov.get(a, b) / denom;
            cov.set(a, b, v);
        }
    }
    let trace: F = (0..d).map(|j| cov.get(j, j)).sum();
    let rank_tol = (trace / F::cast(d as f64)).max(F::one()) * F::cast(1e-12);

    let tol = F::cast(1e-10).max(F::epsilon() * F::cast(10.0));
    let mut rng = rng_from(0x5EED_5EED);
    let mut components: Vec<Vec<F>> = Vec::with_capacity(r);
    let mut variances: Vec<F> = Vec::with_capacity(r);

    for _ in 0..r {
        let mut v: Vec<F> = (0..d)
            .map(|_| F::cast(rand::Rng::gen_range(&mut rng, -1.0..1.0)))
            .collect();
        orthonormalize(&mut v, &components);
        let mut eig = F::zero();
        for _ in 0..PCA_MAX_ITER {
            let mut next = cov.mat_vec(&v);
            orthonormalize(&mut next, &components);
            let norm = dot(&next, &next).sqrt();
            if norm <= rank_tol {
                eig = F::zero();
                break;
            }
            for x in next.iter_mut() {
                *x = *x / norm;
            }
            let delta_minus = diff_norm(&next, &v, false);
            let delta_plus = diff_norm(&next, &v, true);
            v = next;
            eig = dot(&cov.mat_vec(&v), &v);
            if delta_minus <= tol || delta_plus <= tol {
                break;
            }
        }
        if eig <= rank_tol {
            break;
        }
        // deterministic sign: largest-magnitude coordinate positive
        let lead = (0..d)
            .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap())
            .unwrap();
        if v[lead] < F::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        // deflate
        for a in 0..d {
            for b in 0..d {
                let w = cov.get(a, b) - eig * v[a] * v[b];
                cov.set(a, b, w);
            }
        }
        components.push(v);
        variances.push(eig);
    }

    let achieved = components.len();
    let mut comp = Matrix::zeros(d, achieved);
    for (c, vec) in components.iter().enumerate() {
        for (row, &val) in vec.iter().enumerate() {
            comp.set(row, c, val);
        }
    }
    Ok(PCAProjection {
        mean,
        components: comp,
        explained_variance: variances,
        requested_dim: r,
        rank_deficient: achieved < r,
    })
}

fn orthonormalize<F: Float>(v: &mut [F], basis: &[Vec<F>]) {
    for b in basis {
        let proj = dot(v, b);
        for (x, &bb) in v.iter_mut().zip(b) {
            *x = *x - proj * bb;
        }
    }
}

fn diff_norm<F: Float>(a: &[F], b: &[F], flipped: bool) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = if flipped { x + y } else { x - y };
            d * d
        })
        .sum::<F>()
        .sqrt()
}

/// Projects rows onto the fitted components: `(x - mean) . components`.
pub fn pca_project<F: Float>(proj: &PCAProjection<F>, features: &Matrix<F>) -> Matrix<F> {
    let r = proj.components.n_cols();
    let mut out = Matrix::zeros(0, r);
    let mut buf = vec![F::zero(); r];
    for row in features.iter_rows() {
        for (c, b) in buf.iter_mut().enumerate() {
            *b = row
                .iter()
                .zip(&proj.mean)
                .enumerate()
                .fold(F::zero(), |acc, (j, (&x, &m))| {
                    acc + (x - m) * proj.components.get(j, c)
                });
        }
        out.push_row(&buf);
    }
    out
}

/// Inverse of [`pca_project`] onto the component span (exact when the
/// projection kept full rank).
pub fn pca_reconstruct<F: Float>(proj: &PCAProjection<F>, projected: &Matrix<F>) -> Matrix<F> {
    let d = proj.mean.len();
    let mut out = Matrix::zeros(0, d);
    let mut buf = vec![F::zero(); d];
    for row in projected.iter_rows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = proj.mean[j]
                + row
                    .iter()
                    .enumerate()
                    .fold(F::zero(), |acc, (c, &z)| acc + z * proj.components.get(j, c));
        }
        out.push_row(&buf);
    }
    out
}

// ---------------------------------------------------------------------------
// diagnostics
// ---------------------------------------------------------------------------

/// Discriminator false-positive rate and boundary-smoothness estimates for
/// the theorem harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremDiagnostics {
    pub epsilon_hat: f64,
    /// Scale-free product of the boundary-local slope estimate and the
    /// minority nearest-neighbor spacing; absent when no boundary-adjacent
    /// pair exists.
    pub lipschitz_over_reach_hat: Option<f64>,
    pub boundary_threshold_t: f64,
}

/// Fraction of held-out synthetic points the discriminator scores at or
/// above `eta`.
pub fn estimate_epsilon<F: Float, C: ProbClassifier<F>>(
    discriminator: &C,
    held_out_synthetic: &Matrix<F>,
    eta: F,
) -> Result<f64> {
    if held_out_synthetic.is_empty() {
        return Err(Error::EmptyHoldout);
    }
    let scores = realism_score(discriminator, held_out_synthetic)?;
    let hits = scores.iter().filter(|&&s| s >= eta).count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Window in probability space defining boundary-adjacent points.
pub const BOUNDARY_WINDOW: f64 = 0.1;

/// Estimates the local slope of `p_hat` between boundary-adjacent minority
/// pairs (both within [`BOUNDARY_WINDOW`] of `t`) and multiplies it by the
/// median minority nearest-neighbor spacing; the product is invariant to
/// feature rescaling. Returns `None` when no boundary-adjacent pair exists.
pub fn estimate_l_over_rho<F: Float, C: ProbClassifier<F>>(
    p_hat_model: &C,
    minority: &Matrix<F>,
    t: F,
) -> Result<Option<f64>> {
    let n = minority.n_rows();
    if n < 2 {
        return Ok(None);
    }
    let probs = p_hat_model.predict_proba(minority)?;
    let window = F::cast(BOUNDARY_WINDOW);
    let adjacent: Vec<usize> = (0..n).filter(|&i| (probs[i] - t).abs() <= window).collect();

    let mut l_hat = F::zero();
    let mut found = false;
    for (a, &i) in adjacent.iter().enumerate() {
        for &j in &adjacent[a + 1..] {
            let dist = euclidean(minority.row(i), minority.row(j));
            if dist > F::zero() {
                found = true;
                let slope = (probs[i] - probs[j]).abs() / dist;
                if slope > l_hat {
                    l_hat = slope;
                }
            }
        }
    }
    if !found {
        return Ok(None);
    }

    let mut nn: Vec<F> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| squared_distance(minority.row(i), minority.row(j)))
                .fold(F::infinity(), |acc, d| if d < acc { d } else { acc })
                .sqrt()
        })
        .collect();
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rho_hat = median_of_sorted(&nn);
    Ok(Some((l_hat * rho_hat).to64()))
}
