//! Operating-point and threshold-free metrics, the prior-weighted F-beta
//! surrogate, precision-floor threshold selection, BCa bootstrap intervals,
//! and the DeLong test for correlated AUCs.
//!
//! Metric functions take scores in any [`Float`] type and report statistics
//! as `f64`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::Float;
use rand::Rng;

// ---------------------------------------------------------------------------
// confusion counts and point metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// Counts predictions at threshold `t`; a score exactly equal to `t` counts
/// as a positive prediction.
pub fn confusion_at<F: Float>(probs: &[F], labels: &[u8], t: F) -> Confusion {
    let mut c = Confusion {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= t, y == 1) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub balanced_accuracy: f64,
}

/// Standard precision/recall/F metrics with 0/0 conventions: precision = 0
/// when nothing is predicted positive, recall = 0 when there are no
/// positives, F = 0 when precision = recall = 0.
pub fn prf_metrics(c: &Confusion, beta: f64) -> PrfMetrics {
    let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
    let specificity = ratio(c.true_neg, c.true_neg + c.false_pos);
    let f1 = f_measure(precision, recall, 1.0);
    let f_beta = f_measure(precision, recall, beta);
    PrfMetrics {
        precision,
        recall,
        f1,
        f_beta,
        balanced_accuracy: 0.5 * (recall + specificity),
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f_measure(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

/// Prior-weighted, probability-weighted F-beta surrogate:
///
/// `(1+b^2) * pi1 * E[p * 1{p>=t} | y=1] / (b^2 * pi1 + (1-pi1) * E[1{p>=t} | y=0])`
///
/// The value is reported unclamped; it can exceed 1 (e.g. a perfect scorer
/// at pi1 = 0.5 yields 2).
pub fn f_tilde_beta<F: Float>(
    probs: &[F],
    labels: &[u8],
    t: F,
    beta: f64,
    pi1: f64,
) -> Result<f64> {
    let mut pos_sum = 0.0f64;
    let mut n_pos = 0usize;
    let mut neg_hits = 0usize;
    let mut n_neg = 0usize;
    for (&p, &y) in probs.iter().zip(labels) {
        if y == 1 {
            n_pos += 1;
            if p >= t {
                pos_sum += p.to64();
            }
        } else {
            n_neg += 1;
            if p >= t {
                neg_hits += 1;
            }
        }
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassInput);
    }
    let b2 = beta * beta;
    let num = (1.0 + b2) * pi1 * (pos_sum / n_pos as f64);
    let den = b2 * pi1 + (1.0 - pi1) * (neg_hits as f64 / n_neg as f64);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// ranking metrics
// ---------------------------------------------------------------------------

/// Mann-Whitney AUROC with half credit for ties, computed with midranks.
pub fn auroc<F: Float>(scores: &[F], labels: &[u8]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // midrank of the tied group occupying 1-based positions i+1 ..= j+1
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision over descending-score cut points, with tied scores
/// grouped into a single cut.
pub fn average_precision<F: Float>(scores: &[F], labels: &[u8]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut ap = 0.0f64;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Mean squared error between probabilities and binary outcomes.
pub fn brier<F: Float>(probs: &[F], labels: &[u8]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let d = y as f64 - p.to64();
            d * d
        })
        .sum();
    sum / probs.len() as f64
}

/// Expected and maximum calibration error over equal-width bins; empty bins
/// contribute nothing.
pub fn ece_mce<F: Float>(probs: &[F], labels: &[u8], n_bins: usize) -> (f64, f64) {
    assert!(n_bins >= 1, "need at least one bin");
    let n = probs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut count = vec![0usize; n_bins];
    let mut sum_p = vec![0.0f64; n_bins];
    let mut sum_y = vec![0.0f64; n_bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let p = p.to64();
        let b = ((p * n_bins as f64).floor() as usize).min(n_bins - 1);
        count[b] += 1;
        sum_p[b] += p;
        sum_y[b] += y as f64;
    }
    let mut ece = 0.0f64;
    let mut mce = 0.0f64;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let gap = (sum_p[b] / count[b] as f64 - sum_y[b] / count[b] as f64).abs();
        ece += count[b] as f64 / n as f64 * gap;
        mce = mce.max(gap);
    }
    (ece, mce)
}

// ---------------------------------------------------------------------------
// threshold selection
// ---------------------------------------------------------------------------

/// A selected decision threshold with the precision/recall it achieved on
/// the selection split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when no candidate threshold met the precision floor and the
    /// max-precision fallback was used.
    pub feasible: bool,
}

/// Candidate thresholds for `select_threshold`: 0, midpoints of consecutive
/// distinct sorted scores, and 1.
pub fn threshold_candidates<F: Float>(probs: &[F]) -> Vec<F> {
    let mut uniq: Vec<F> = probs.to_vec();
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    uniq.dedup();
    let mut cands = Vec::with_capacity(uniq.len() + 1);
    cands.push(F::zero());
    for w in uniq.windows(2) {
        cands.push((w[0] + w[1]) / F::cast(2.0));
    }
    cands.push(F::one());
    cands
}

/// Picks the candidate threshold maximizing F1 subject to precision >= `p0`
/// (ties broken toward the higher threshold). If no candidate is feasible,
/// falls back to the precision-maximizing threshold with F1 then threshold
/// as tie-breaks, and reports `feasible = false`.
pub fn select_threshold<F: Float>(probs: &[F], labels: &[u8], p0: f64) -> Result<OperatingPoint> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassInput);
    }
    let mut best_feasible: Option<OperatingPoint> = None;
    let mut best_fallback: Option<OperatingPoint> = None;
    // descending order so "keep strictly better" realizes the higher-threshold tie-break
    for &t in threshold_candidates(probs).iter().rev() {
        let m = prf_metrics(&confusion_at(probs, labels, t), 1.0);
        let op = OperatingPoint {
            threshold: t.to64(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            feasible: true,
        };
        if m.precision >= p0 {
            if best_feasible.map_or(true, |b| op.f1 > b.f1) {
                best_feasible = Some(op);
            }
        }
        if best_fallback.map_or(true, |b| {
            op.precision > b.precision || (op.precision == b.precision && op.f1 > b.f1)
        }) {
            best_fallback = Some(op);
        }
    }
    Ok(best_feasible.unwrap_or_else(|| {
        let mut op = best_fallback.expect("candidate list is never empty");
        op.feasible = false;
        op
    }))
}

// ---------------------------------------------------------------------------
// BCa bootstrap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub confidence: f64,
    pub seed: u64,
    /// Resample within each class, preserving class counts. Off by default
    /// (plain bootstrap).
    pub stratified: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: 2000,
            confidence: 0.95,
            seed: 0,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcaInterval {
    pub lo: f64,
    pub hi: f64,
    pub point: f64,
    /// All resample statistics were identical; the interval collapsed to the
    /// point estimate.
    pub degenerate: bool,
    /// Number of resamples that still missed a class after 10 redraw attempts.
    pub single_class_resamples: usize,
}

/// Bias-corrected and accelerated bootstrap interval for a statistic of
/// `(probs, labels)`.
///
/// Resamples that miss a class are redrawn up to 10 times from the same
/// per-resample substream, then used as-is and counted in the result.
/// Deterministic given `config.seed`.
pub fn bca_bootstrap<F: Float, S>(
    statistic: S,
    probs: &[F],
    labels: &[u8],
    config: &BootstrapConfig,
) -> Result<BcaInterval>
where
    S: Fn(&[F], &[u8]) -> f64,
{
    let n = probs.len();
    if n < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            found: n,
        });
    }
    if config.n_resamples < 2 {
        return Err(Error::InvalidConfig("need at least 2 resamples".into()));
    }
    let point = statistic(probs, labels);

    let pos_idx: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let neg_idx: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();

    let b = config.n_resamples;
    let mut boot = Vec::with_capacity(b);
    let mut single_class = 0usize;
    let mut rp: Vec<F> = Vec::with_capacity(n);
    let mut rl: Vec<u8> = Vec::with_capacity(n);
    for bi in 0..b {
        let mut rng = rng_from(derive_seed(config.seed, bi as u64));
        let mut attempts = 0;
        loop {
            rp.clear();
            rl.clear();
            if config.stratified {
                for (pool, count) in [(&pos_idx, pos_idx.len()), (&neg_idx, neg_idx.len())] {
                    for _ in 0..count {
                        let i = pool[rng.gen_range(0..pool.len())];
                        rp.push(probs[i]);
                        rl.push(labels[i]);
                    }
                }
            } else {
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    rp.push(probs[i]);
                    rl.push(labels[i]);
                }
            }
            attempts += 1;
            let has_both = rl.iter().any(|&y| y == 1) && rl.iter().any(|&y| y == 0);
            if has_both || attempts >= 10 {
                if !has_both {
                    single_class += 1;
                }
                break;
            }
        }
        boot.push(statistic(&rp, &rl));
    }
    boot.sort_by(|a, b| a.total_cmp(b));

    if boot.iter().all(|&v| v == boot[0]) {
        return Ok(BcaInterval {
            lo: boot[0],
            hi: boot[0],
            point,
            degenerate: true,
            single_class_resamples: single_class,
        });
    }

    // bias correction from the fraction of bootstrap stats below the point estimate
    let below = boot.iter().filter(|&&v| v < point).count() as f64;
    let frac = (below / b as f64).clamp(0.5 / b as f64, 1.0 - 0.5 / b as f64);
    let z0 = normal_quantile(frac);

    // acceleration from jackknife skewness
    let mut jack = Vec::with_capacity(n);
    let mut jp: Vec<F> = Vec::with_capacity(n - 1);
    let mut jl: Vec<u8> = Vec::with_capacity(n - 1);
    for i in 0..n {
        jp.clear();
        jl.clear();
        for j in 0..n {
            if j != i {
                jp.push(probs[j]);
                jl.push(labels[j]);
            }
        }
        jack.push(statistic(&jp, &jl));
    }
    let jack_mean = jack.iter().sum::<f64>() / n as f64;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for &v in &jack {
        let d = jack_mean - v;
        num += d * d * d;
        den += d * d;
    }
    let a = if den > 0.0 {
        num / (6.0 * den.powf(1.5))
    } else {
        0.0
    };

    let alpha = 1.0 - config.confidence;
    let (p_lo, p_hi) = bca_adjusted_levels(z0, a, alpha);
    Ok(BcaInterval {
        lo: boot[quantile_index(p_lo, b)],
        hi: boot[quantile_index(p_hi, b)],
        point,
        degenerate: false,
        single_class_resamples: single_class,
    })
}

/// Adjusted quantile levels for the BCa interval. With `z0 = 0` and `a = 0`
/// this is exactly the percentile interval.
pub fn bca_adjusted_levels(z0: f64, a: f64, alpha: f64) -> (f64, f64) {
    if z0 == 0.0 && a == 0.0 {
        return (alpha / 2.0, 1.0 - alpha / 2.0);
    }
    let adjust = |z_alpha: f64| {
        let t = z0 + z_alpha;
        normal_cdf(z0 + t / (1.0 - a * t))
    };
    (
        adjust(normal_quantile(alpha / 2.0)),
        adjust(normal_quantile(1.0 - alpha / 2.0)),
    )
}

/// Index of the p-quantile in a sorted sample of size `b`: the smallest
/// order statistic whose empirical CDF reaches `p`.
pub fn quantile_index(p: f64, b: usize) -> usize {
    let idx = (p * b as f64).ceil() as isize - 1;
    idx.clamp(0, b as isize - 1) as usize
}

// ---------------------------------------------------------------------------
// DeLong test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelongOutcome {
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: f64,
    pub p_value: f64,
    /// Variance of the AUC difference was zero while the AUCs differed;
    /// `p_value` is reported as 0.
    pub zero_variance_unequal: bool,
}

/// DeLong structural-components test for two correlated AUCs computed on the
/// same samples. Two-sided normal p-value.
pub fn delong_test<F: Float>(
    scores_a: &[F],
    scores_b: &[F],
    labels: &[u8],
) -> Result<DelongOutcome> {
    assert_eq!(scores_a.len(), labels.len(), "paired scores required");
    assert_eq!(scores_b.len(), labels.len(), "paired scores required");
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClassInput);
    }

    let (v10_a, v01_a, auc_a) = structural_components(scores_a, &pos, &neg);
    let (v10_b, v01_b, auc_b) = structural_components(scores_b, &pos, &neg);

    let s10 = |x: &[f64], mx: f64, y: &[f64], my: f64| -> f64 {
        if x.len() < 2 {
            return 0.0;
        }
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (a - mx) * (b - my))
            .sum::<f64>()
            / (x.len() - 1) as f64
    };
    let var = (s10(&v10_a, auc_a, &v10_a, auc_a) + s10(&v10_b, auc_b, &v10_b, auc_b)
        - 2.0 * s10(&v10_a, auc_a, &v10_b, auc_b))
        / pos.len() as f64
        + (s10(&v01_a, auc_a, &v01_a, auc_a) + s10(&v01_b, auc_b, &v01_b, auc_b)
            - 2.0 * s10(&v01_a, auc_a, &v01_b, auc_b))
            / neg.len() as f64;

    let diff = auc_a - auc_b;
    if var <= 0.0 {
        if diff == 0.0 {
            return Ok(DelongOutcome {
                auc_a,
                auc_b,
                z: 0.0,
                p_value: 1.0,
                zero_variance_unequal: false,
            });
        }
        return Ok(DelongOutcome {
            auc_a,
            auc_b,
            z: f64::INFINITY * diff.signum(),
            p_value: 0.0,
            zero_variance_unequal: true,
        });
    }
    let z = diff / var.sqrt();
    Ok(DelongOutcome {
        auc_a,
        auc_b,
        z,
        p_value: 2.0 * (1.0 - normal_cdf(z.abs())),
        zero_variance_unequal: false,
    })
}

/// DeLong variance of a single AUC estimate.
pub fn auc_variance<F: Float>(scores: &[F], labels: &[u8]) -> Result<f64> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClassInput);
    }
    let (v10, v01, auc) = structural_components(scores, &pos, &neg);
    let var_of = |v: &[f64]| -> f64 {
        if v.len() < 2 {
            return 0.0;
        }
        v.iter().map(|&x| (x - auc) * (x - auc)).sum::<f64>() / (v.len() - 1) as f64
    };
    Ok(var_of(&v10) / pos.len() as f64 + var_of(&v01) / neg.len() as f64)
}

fn structural_components<F: Float>(
    scores: &[F],
    pos: &[usize],
    neg: &[usize],
) -> (Vec<f64>, Vec<f64>, f64) {
    let psi = |a: F, b: F| -> f64 {
        if a > b {
            1.0
        } else if a == b {
            0.5
        } else {
            0.0
        }
    };
    let v10: Vec<f64> = pos
        .iter()
        .map(|&i| neg.iter().map(|&j| psi(scores[i], scores[j])).sum::<f64>() / neg.len() as f64)
        .collect();
    let v01: Vec<f64> = neg
        .iter()
        .map(|&j| pos.iter().map(|&i| psi(scores[i], scores[j])).sum::<f64>() / pos.len() as f64)
        .collect();
    let auc = v10.iter().sum::<f64>() / pos.len() as f64;
    (v10, v01, auc)
}

// ---------------------------------------------------------------------------
// normal distribution helpers
// ---------------------------------------------------------------------------

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf approximation.
pub fn normal_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(t))
}

fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Standard normal quantile (Acklam's rational approximation).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Two-sided 97.5% Student-t quantile for small degrees of freedom, used for
/// fold-level aggregate intervals.
pub fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281, 2.2010,
        2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860, 2.0796, 2.0739,
        2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423,
    ];
    if df == 0 {
        f64::NAN
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else {
        1.9600
    }
}

// ---------------------------------------------------------------------------
// metric report
// ---------------------------------------------------------------------------

/// All metrics for one experimental cell, serialized as a flat JSON object
/// with snake_case keys; interval fields are two-element arrays and absent
/// values are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub threshold: f64,
    pub feasible: bool,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub auroc: f64,
    pub average_precision: f64,
    pub brier: f64,
    pub ece: f64,
    pub mce: f64,
    /// `(beta, value)` pairs, in config order.
    pub f_beta: Vec<(f64, f64)>,
    pub f_tilde_beta: Vec<(f64, f64)>,
    pub recall_ci: Option<(f64, f64)>,
    pub average_precision_ci: Option<(f64, f64)>,
    pub delong_p: Option<f64>,
}

/// Formats a beta value for use in JSON keys: `1` for 1.0, `2.5` for 2.5.
pub fn beta_key(beta: f64) -> String {
    if beta.fract() == 0.0 {
        format!("{}", beta as i64)
    } else {
        format!("{beta}")
    }
}

impl MetricReport {
    /// Numeric metric values keyed the same way as the JSON serialization,
    /// excluding intervals and flags.
    pub fn metric_values(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("threshold".to_string(), self.threshold),
            ("recall".to_string(), self.recall),
            ("precision".to_string(), self.precision),
            ("f1".to_string(), self.f1),
            ("balanced_accuracy".to_string(), self.balanced_accuracy),
            ("auroc".to_string(), self.auroc),
            ("average_precision".to_string(), self.average_precision),
            ("brier".to_string(), self.brier),
            ("ece".to_string(), self.ece),
            ("mce".to_string(), self.mce),
        ];
        for &(b, v) in &self.f_beta {
            out.push((format!("f_beta_{}", beta_key(b)), v));
        }
        for &(b, v) in &self.f_tilde_beta {
            out.push((format!("f_tilde_beta_{}", beta_key(b)), v));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in self.metric_values() {
            map.insert(k, json!(v));
        }
        map.insert("feasible".into(), json!(self.feasible));
        if let Some((lo, hi)) = self.recall_ci {
            map.insert("recall_ci".into(), json!([lo, hi]));
        }
        if let Some((lo, hi)) = self.average_precision_ci {
            map.insert("average_precision_ci".into(), json!([lo, hi]));
        }
        if let Some(p) = self.delong_p {
            map.insert("delong_p".into(), json!(p));
        }
        Value::Object(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_basics() {
        let c = confusion_at(&[0.9f64, 0.1], &[1, 0], 0.5);
        assert_eq!(
            c,
            Confusion {
                true_pos: 1,
                false_pos: 0,
                true_neg: 1,
                false_neg: 0
            }
        );
        // score equal to the threshold counts positive
        let c = confusion_at(&[0.5f64], &[1], 0.5);
        assert_eq!(c.true_pos, 1);
    }

    #[test]
    fn confusion_matches_brute_recount() {
        let mut rng = rng_from(7);
        for _ in 0..20 {
            let n = 20;
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let t = rng.gen_range(0.0..1.0);
            let c = confusion_at(&probs, &labels, t);
            let mut brute = [0usize; 4];
            for i in 0..n {
                let pred = probs[i] >= t;
                let pos = labels[i] == 1;
                match (pred, pos) {
                    (true, true) => brute[0] += 1,
                    (true, false) => brute[1] += 1,
                    (false, false) => brute[2] += 1,
                    (false, true) => brute[3] += 1,
                }
            }
            assert_eq!(
                (c.true_pos, c.false_pos, c.true_neg, c.false_neg),
                (brute[0], brute[1], brute[2], brute[3])
            );
        }
    }

    #[test]
    fn prf_perfect_and_conventions() {
        let m = prf_metrics(
            &Confusion {
                true_pos: 1,
                false_pos: 0,
                true_neg: 1,
                false_neg: 0,
            },
            1.0,
        );
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let m = prf_metrics(
            &Confusion {
                true_pos: 0,
                false_pos: 0,
                true_neg: 3,
                false_neg: 2,
            },
            1.0,
        );
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn f1_from_reported_precision_recall() {
        // published rounded operating point: precision 0.7891, recall 0.8632
        let p = 0.7891f64;
        let r = 0.8632f64;
        let f1 = 2.0 * p * r / (p + r);
        assert!((f1 - 2.0 * 0.7891 * 0.8632 / (0.7891 + 0.8632)).abs() < 1e-15);
        // agreement with the reported F1 of 0.8247 within reporting rounding
        assert!((f1 - 0.8247).abs() < 1e-3, "f1 = {f1}");
    }

    #[test]
    fn f_tilde_perfect_scorer_at_half_prior() {
        let probs = vec![1.0f64, 1.0, 0.0, 0.0];
        let labels = vec![1, 1, 0, 0];
        let v = f_tilde_beta(&probs, &labels, 0.5, 1.0, 0.5).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn f_tilde_empty_numerator() {
        let probs = vec![0.1f64, 0.2, 0.9];
        let labels = vec![1, 1, 0];
        let v = f_tilde_beta(&probs, &labels, 0.5, 1.0, 0.4).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn f_tilde_large_beta_limit() {
        let mut rng = rng_from(3);
        let n = 200;
        let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 4 == 0) as u8).collect();
        let pi1 = 0.25;
        let t = 0.4;
        let v = f_tilde_beta(&probs, &labels, t, 100.0, pi1).unwrap();
        let pos_mean: f64 = probs
            .iter()
            .zip(&labels)
            .filter(|(_, &y)| y == 1)
            .map(|(&p, _)| if p >= t { p } else { 0.0 })
            .sum::<f64>()
            / labels.iter().filter(|&&y| y == 1).count() as f64;
        assert!((v - pos_mean).abs() / pos_mean < 0.01, "{v} vs {pos_mean}");
    }

    #[test]
    fn f_tilde_numerator_directional() {
        // raising one positive's score from below t to above t never lowers the surrogate numerator
        let labels = vec![1, 1, 0, 0];
        let before = vec![0.3f64, 0.8, 0.2, 0.4];
        let after = vec![0.6f64, 0.8, 0.2, 0.4];
        let f_before = f_tilde_beta(&before, &labels, 0.5, 1.0, 0.5).unwrap();
        let f_after = f_tilde_beta(&after, &labels, 0.5, 1.0, 0.5).unwrap();
        assert!(f_after >= f_before);
    }

    #[test]
    fn auroc_trivials() {
        assert_eq!(auroc(&[0.9f64, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5f64, 0.5, 0.5, 0.5], &[1, 0, 1, 0]).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[0.5f64, 0.4], &[1, 1]),
            Err(Error::SingleClassInput)
        ));
    }

    #[test]
    fn auroc_matches_pair_count_oracle() {
        let mut rng = rng_from(11);
        for _ in 0..50 {
            let n = rng.gen_range(5..30);
            // coarse grid scores to force ties
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            if labels.iter().all(|&y| y == 1) || labels.iter().all(|&y| y == 0) {
                continue;
            }
            let fast = auroc(&scores, &labels).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == 1 && labels[j] == 0 {
                        den += 1.0;
                        num += if scores[i] > scores[j] {
                            1.0
                        } else if scores[i] == scores[j] {
                            0.5
                        } else {
                            0.0
                        };
                    }
                }
            }
            assert!((fast - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn auroc_invariant_under_monotone_transform() {
        let mut rng = rng_from(13);
        let scores: Vec<f64> = (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let labels: Vec<u8> = (0..40).map(|_| rng.gen_range(0..2) as u8).collect();
        let base = auroc(&scores, &labels).unwrap();
        let cubed: Vec<f64> = scores.iter().map(|&s| s * s * s).collect();
        let exped: Vec<f64> = scores.iter().map(|&s| s.exp()).collect();
        assert_eq!(base, auroc(&cubed, &labels).unwrap());
        assert_eq!(base, auroc(&exped, &labels).unwrap());
    }

    #[test]
    fn ap_trivials() {
        // single positive ranked first
        assert_eq!(
            average_precision(&[0.9f64, 0.5, 0.1], &[1, 0, 0]).unwrap(),
            1.0
        );
        // single positive ranked last of n
        let n = 5;
        let scores: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 0.1).collect();
        let mut labels = vec![0u8; n];
        labels[n - 1] = 1;
        assert!((average_precision(&scores, &labels).unwrap() - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn ap_constant_scores_equals_prior() {
        let scores = vec![0.3f64; 10];
        let labels = vec![1, 0, 0, 1, 0, 0, 0, 0, 0, 0];
        assert!((average_precision(&scores, &labels).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ap_matches_threshold_enumeration_with_ties() {
        let scores = vec![0.9f64, 0.8, 0.8, 0.8, 0.7, 0.6, 0.5, 0.5, 0.4, 0.3, 0.2, 0.1];
        let labels = vec![1u8, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0];
        let fast = average_precision(&scores, &labels).unwrap();
        // brute force: recount confusion at every distinct threshold
        let mut uniq: Vec<f64> = scores.clone();
        uniq.sort_by(|a, b| b.partial_cmp(a).unwrap());
        uniq.dedup();
        let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        let mut ap = 0.0;
        let mut prev_r = 0.0;
        for &t in &uniq {
            let c = confusion_at(&scores, &labels, t);
            let r = c.true_pos as f64 / n_pos;
            let p = c.true_pos as f64 / (c.true_pos + c.false_pos) as f64;
            ap += (r - prev_r) * p;
            prev_r = r;
        }
        assert!((fast - ap).abs() < 1e-12);
    }

    #[test]
    fn brier_trivials() {
        assert_eq!(brier(&[1.0f64, 0.0], &[1, 0]), 0.0);
        assert_eq!(brier(&[0.5f64, 0.5], &[1, 0]), 0.25);
        assert!((brier(&[0.8f64, 0.3], &[1, 0]) - 0.065).abs() < 1e-15);
    }

    #[test]
    fn ece_mce_perfectly_calibrated_bin() {
        // all probs 0.5, half the labels positive: single occupied bin, zero gap
        let (ece, mce) = ece_mce(&[0.5f64; 8], &[1, 0, 1, 0, 1, 0, 1, 0], 10);
        assert!(ece.abs() < 1e-12 && mce.abs() < 1e-12);
    }

    #[test]
    fn ece_mce_hand_binned() {
        // 4 samples at 0.1 with no positives (gap 0.1), 4 at 0.9 all positive
        // (gap 0.1): ECE = 0.5*0.1 + 0.5*0.1 = 0.1 and MCE = 0.1
        let probs = vec![0.1f64, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9];
        let labels = vec![0u8, 0, 0, 0, 1, 1, 1, 1];
        let (ece, mce) = ece_mce(&probs, &labels, 10);
        assert!((ece - 0.1).abs() < 1e-12, "ece = {ece}");
        assert!((mce - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ece_mce_single_sample() {
        let (ece, mce) = ece_mce(&[0.9f64], &[0], 10);
        assert!((ece - 0.9).abs() < 1e-12);
        assert!((mce - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ece_le_mce_property() {
        let mut rng = rng_from(23);
        for _ in 0..200 {
            let n = rng.gen_range(1..50);
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let (ece, mce) = ece_mce(&probs, &labels, 10);
            assert!(ece <= mce + 1e-12);
        }
    }

    #[test]
    fn select_threshold_separable() {
        let probs = vec![0.9f64, 0.8, 0.2, 0.1];
        let labels = vec![1, 1, 0, 0];
        let op = select_threshold(&probs, &labels, 0.9).unwrap();
        assert!(op.feasible);
        assert_eq!(op.precision, 1.0);
        assert_eq!(op.recall, 1.0);
        assert_eq!(op.threshold, 0.5); // midpoint separator
    }

    #[test]
    fn select_threshold_infeasible_falls_back_to_max_precision() {
        // the top-scored sample is negative, so no threshold is precise enough
        let probs = vec![0.9f64, 0.8, 0.85, 0.7];
        let labels = vec![0, 1, 0, 1];
        let op = select_threshold(&probs, &labels, 0.99).unwrap();
        assert!(!op.feasible);
        // no threshold achieves precision 0.99; fallback maximizes precision
        let best_precision = threshold_candidates(&probs)
            .iter()
            .map(|&t| prf_metrics(&confusion_at(&probs, &labels, t), 1.0).precision)
            .fold(0.0f64, f64::max);
        assert_eq!(op.precision, best_precision);
    }

    #[test]
    fn select_threshold_matches_exhaustive_scan() {
        let mut rng = rng_from(41);
        for _ in 0..100 {
            let n = rng.gen_range(4..12);
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 8.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;
            let p0 = 0.85;
            let op = select_threshold(&probs, &labels, p0).unwrap();
            // optimality: no candidate with precision >= p0 has strictly higher F1
            for &t in &threshold_candidates(&probs) {
                let m = prf_metrics(&confusion_at(&probs, &labels, t), 1.0);
                if m.precision >= p0 {
                    assert!(m.f1 <= op.f1 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn bca_constant_statistic_degenerates() {
        let probs: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let iv = bca_bootstrap(|_, _| 0.7, &probs, &labels, &BootstrapConfig::default()).unwrap();
        assert!(iv.degenerate);
        assert_eq!(iv.lo, 0.7);
        assert_eq!(iv.hi, 0.7);
    }

    #[test]
    fn bca_reduces_to_percentile_when_unadjusted() {
        let (lo, hi) = bca_adjusted_levels(0.0, 0.0, 0.05);
        assert_eq!(lo, 0.025);
        assert_eq!(hi, 0.975);
    }

    #[test]
    fn bca_deterministic_by_seed() {
        let mut rng = rng_from(5);
        let probs: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<u8> = (0..40).map(|_| rng.gen_range(0..2) as u8).collect();
        let cfg = BootstrapConfig {
            n_resamples: 200,
            seed: 9,
            ..Default::default()
        };
        let stat = |p: &[f64], l: &[u8]| {
            prf_metrics(&confusion_at(p, l, 0.5), 1.0).recall
        };
        let a = bca_bootstrap(stat, &probs, &labels, &cfg).unwrap();
        let b = bca_bootstrap(stat, &probs, &labels, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delong_identical_scores() {
        let scores: Vec<f64> = (0..30).map(|i| i as f64 / 30.0).collect();
        let labels: Vec<u8> = (0..30).map(|i| (i % 3 == 0) as u8).collect();
        let out = delong_test(&scores, &scores, &labels).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.z, 0.0);
        assert!(!out.zero_variance_unequal);
    }

    #[test]
    fn delong_perfect_vs_random() {
        let mut rng = rng_from(77);
        let n = 200;
        let labels: Vec<u8> = (0..n).map(|_| (rng.gen_range(0..4) == 0) as u8).collect();
        let perfect: Vec<f64> = labels
            .iter()
            .map(|&y| y as f64 + rng.gen_range(-0.1..0.1))
            .collect();
        let random: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let out = delong_test(&perfect, &random, &labels).unwrap();
        assert!(out.auc_a > 0.95);
        assert!(out.p_value < 0.001, "p = {}", out.p_value);

        // permutation oracle: shuffling which model produced which score set
        // cannot produce a difference this large more than rarely
        let observed = (out.auc_a - out.auc_b).abs();
        let mut extreme = 0;
        let total = 200;
        for rep in 0..total {
            let mut r2 = rng_from(1000 + rep);
            let (mut a2, mut b2) = (perfect.clone(), random.clone());
            for i in 0..n {
                if r2.gen_bool(0.5) {
                    std::mem::swap(&mut a2[i], &mut b2[i]);
                }
            }
            let d = (auroc(&a2, &labels).unwrap() - auroc(&b2, &labels).unwrap()).abs();
            if d >= observed {
                extreme += 1;
            }
        }
        assert!((extreme as f64) / (total as f64) < 0.01);
    }

    #[test]
    fn delong_variance_close_to_bootstrap_variance() {
        let mut rng = rng_from(55);
        let n = 500;
        let labels: Vec<u8> = (0..n).map(|_| (rng.gen_range(0..5) == 0) as u8).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| y as f64 * 0.8 + rng.gen_range(0.0..1.0))
            .collect();
        let analytic = auc_variance(&scores, &labels).unwrap();
        let mut boots = Vec::new();
        for b in 0..2000u64 {
            let mut r = rng_from(derive_seed(4242, b));
            let mut sp = Vec::with_capacity(n);
            let mut sl = Vec::with_capacity(n);
            for _ in 0..n {
                let i = r.gen_range(0..n);
                sp.push(scores[i]);
                sl.push(labels[i]);
            }
            if sl.iter().any(|&y| y == 1) && sl.iter().any(|&y| y == 0) {
                boots.push(auroc(&sp, &sl).unwrap());
            }
        }
        let mean = boots.iter().sum::<f64>() / boots.len() as f64;
        let var = boots.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>()
            / (boots.len() - 1) as f64;
        assert!(
            (analytic - var).abs() / var < 0.2,
            "analytic {analytic} vs bootstrap {var}"
        );
    }

    #[test]
    fn normal_helpers_are_sane() {
        // the erf approximation carries ~1e-7 absolute error
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-7);
        assert!((normal_cdf(1.96) - 0.975).abs() < 1e-4);
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-4);
        for &p in &[0.01, 0.025, 0.3, 0.5, 0.8, 0.975, 0.99] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-6);
        }
    }

    #[test]
    fn metric_report_json_round_trip() {
        let report = MetricReport {
            threshold: 0.4,
            feasible: true,
            recall: 0.8,
            precision: 0.9,
            f1: 0.847,
            balanced_accuracy: 0.88,
            auroc: 0.95,
            average_precision: 0.91,
            brier: 0.05,
            ece: 0.02,
            mce: 0.1,
            f_beta: vec![(1.0, 0.847), (2.0, 0.81)],
            f_tilde_beta: vec![(1.0, 0.7)],
            recall_ci: Some((0.7, 0.9)),
            average_precision_ci: None,
            delong_p: None,
        };
        let v = report.to_json();
        assert_eq!(v["recall"], json!(0.8));
        assert_eq!(v["f_beta_2"], json!(0.81));
        assert_eq!(v["recall_ci"], json!([0.7, 0.9]));
        assert!(v.get("average_precision_ci").is_none());
        assert!(v.get("delong_p").is_none());
    }
}
