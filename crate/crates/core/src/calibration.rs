//! Post-hoc probability calibration: Platt scaling, isotonic regression by
//! pool-adjacent-violators, temperature scaling, and reliability-diagram
//! binning.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{log_loss_term, sigmoid};
use crate::Float;

/// A fitted calibration map.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMap<F> {
    pub kind: CalibrationKind<F>,
    pub meta: FitMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationKind<F> {
    /// `p = sigmoid(a * s + b)`.
    Platt { a: F, b: F },
    /// Non-decreasing step function over score breakpoints; queries clamp
    /// flat beyond the fitted range.
    Isotonic { breakpoints: Vec<F>, values: Vec<F> },
    /// `p = sigmoid(logit / t)`, `t > 0`.
    Temperature { t: F },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMeta {
    pub n_samples: usize,
    /// Final value of the fitter's own objective: smoothed-target NLL for
    /// Platt, squared error for isotonic, NLL for temperature.
    pub final_loss: f64,
}

/// Platt scaling: Newton iterations on the NLL of `sigmoid(a*s + b)` against
/// the smoothed targets `(n_pos+1)/(n_pos+2)` and `1/(n_neg+2)`, with step
/// halving. The smoothed objective is convex, so the fit never scores worse
/// than the identity map `(a, b) = (1, 0)`.
pub fn fit_platt<F: Float>(raw_scores: &[F], labels: &[u8]) -> Result<CalibrationMap<F>> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassInput);
    }

    let hi = F::cast((n_pos as f64 + 1.0) / (n_pos as f64 + 2.0));
    let lo = F::cast(1.0 / (n_neg as f64 + 2.0));
    let targets: Vec<F> = labels
        .iter()
        .map(|&y| if y == 1 { hi } else { lo })
        .collect();

    let objective = |a: F, b: F| -> F {
        raw_scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| log_loss_term(a * s + b, t))
            .sum()
    };

    let mut a = F::zero();
    let mut b = F::cast(((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln());
    let mut fval = objective(a, b);
    let eps = F::cast(1e-12);
    for _ in 0..200 {
        let (mut h11, mut h22) = (eps, eps);
        let (mut h21, mut g1, mut g2) = (F::zero(), F::zero(), F::zero());
        for (&s, &t) in raw_scores.iter().zip(&targets) {
            let p = sigmoid(a * s + b);
            let d2 = p * (F::one() - p);
            h11 = h11 + s * s * d2;
            h22 = h22 + d2;
            h21 = h21 + s * d2;
            let d1 = p - t;
            g1 = g1 + s * d1;
            g2 = g2 + d1;
        }
        if g1.abs() < F::cast(1e-10) && g2.abs() < F::cast(1e-10) {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = (h22 * g1 - h21 * g2) / det;
        let db = (h11 * g2 - h21 * g1) / det;

        let mut step = F::one();
        let mut moved = false;
        for _ in 0..40 {
            let (na, nb) = (a - step * da, b - step * db);
            let nf = objective(na, nb);
            if nf < fval {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            step = step * F::cast(0.5);
        }
        if !moved {
            break;
        }
    }
    if !fval.is_finite() {
        return Err(Error::DivergenceDetected);
    }
    Ok(CalibrationMap {
        kind: CalibrationKind::Platt { a, b },
        meta: FitMeta {
            n_samples: labels.len(),
            final_loss: fval.to64(),
        },
    })
}

/// Isotonic regression by pool-adjacent-violators: the non-decreasing step
/// function minimizing squared error to the labels ordered by score. Tied
/// scores are pooled before PAV so the map is a function of the score.
pub fn fit_isotonic_pav<F: Float>(raw_scores: &[F], labels: &[u8]) -> Result<CalibrationMap<F>> {
    if raw_scores.is_empty() {
        return Err(Error::InvalidConfig("isotonic fit needs samples".into()));
    }
    let mut order: Vec<usize> = (0..raw_scores.len()).collect();
    order.sort_by(|&i, &j| raw_scores[i].partial_cmp(&raw_scores[j]).unwrap());

    // pool exact score ties
    let mut scores: Vec<F> = Vec::new();
    let mut means: Vec<F> = Vec::new();
    let mut weights: Vec<F> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut sum = F::zero();
        while j < order.len() && raw_scores[order[j]] == raw_scores[order[i]] {
            sum = sum + F::cast(labels[order[j]] as f64);
            j += 1;
        }
        let w = F::cast((j - i) as f64);
        scores.push(raw_scores[order[i]]);
        means.push(sum / w);
        weights.push(w);
        i = j;
    }

    // PAV: merge adjacent blocks while the mean sequence decreases
    let mut block_start: Vec<usize> = Vec::new();
    let mut block_mean: Vec<F> = Vec::new();
    let mut block_weight: Vec<F> = Vec::new();
    for idx in 0..scores.len() {
        block_start.push(idx);
        block_mean.push(means[idx]);
        block_weight.push(weights[idx]);
        while block_mean.len() > 1 {
            let last = block_mean.len() - 1;
            if block_mean[last - 1] <= block_mean[last] {
                break;
            }
            let w = block_weight[last - 1] + block_weight[last];
            let m =
                (block_mean[last - 1] * block_weight[last - 1] + block_mean[last] * block_weight[last]) / w;
            block_mean[last - 1] = m;
            block_weight[last - 1] = w;
            block_mean.pop();
            block_weight.pop();
            block_start.pop();
        }
    }

    let breakpoints: Vec<F> = block_start.iter().map(|&s| scores[s]).collect();
    let values = block_mean;

    // squared error of the fitted step function on the fitting set
    let mut sse = 0.0f64;
    for (&s, &y) in raw_scores.iter().zip(labels) {
        let v = step_lookup(&breakpoints, &values, s).to64();
        let d = y as f64 - v;
        sse += d * d;
    }

    Ok(CalibrationMap {
        kind: CalibrationKind::Isotonic {
            breakpoints,
            values,
        },
        meta: FitMeta {
            n_samples: labels.len(),
            final_loss: sse,
        },
    })
}

fn step_lookup<F: Float>(breakpoints: &[F], values: &[F], query: F) -> F {
    // value of the last block whose start score is <= query; flat beyond range
    match breakpoints.partition_point(|&b| b <= query) {
        0 => values[0],
        k => values[k - 1],
    }
}

/// Search bracket for the temperature parameter.
pub const TEMPERATURE_BRACKET: (f64, f64) = (0.05, 20.0);

/// Temperature scaling: golden-section search for the `t` minimizing the NLL
/// of `sigmoid(logit / t)` over [0.05, 20]. Strictly monotone in the logit,
/// so rankings are exactly preserved; `t = 1` is kept when the search cannot
/// improve on it.
pub fn fit_temperature<F: Float>(raw_logits: &[F], labels: &[u8]) -> Result<CalibrationMap<F>> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClassInput);
    }
    if raw_logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidConfig("logits must be finite".into()));
    }
    let nll = |t: F| -> F {
        raw_logits
            .iter()
            .zip(labels)
            .map(|(&z, &y)| log_loss_term(z / t, F::cast(y as f64)))
            .sum::<F>()
            / F::cast(labels.len() as f64)
    };

    let inv_phi = F::cast((5.0f64.sqrt() - 1.0) / 2.0);
    let (mut lo, mut hi) = (F::cast(TEMPERATURE_BRACKET.0), F::cast(TEMPERATURE_BRACKET.1));
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (nll(c), nll(d));
    for _ in 0..200 {
        if hi - lo <= F::cast(1e-9) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = nll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = nll(d);
        }
    }
    let mut t = (lo + hi) / F::cast(2.0);
    if nll(F::one()) <= nll(t) {
        t = F::one();
    }
    Ok(CalibrationMap {
        kind: CalibrationKind::Temperature { t },
        meta: FitMeta {
            n_samples: labels.len(),
            final_loss: nll(t).to64(),
        },
    })
}

/// Applies a fitted map elementwise. Platt and temperature take the raw
/// score / logit; isotonic takes the raw score and extrapolates flat.
pub fn apply_calibration<F: Float>(map: &CalibrationMap<F>, raw: &[F]) -> Vec<F> {
    match &map.kind {
        CalibrationKind::Platt { a, b } => raw.iter().map(|&s| sigmoid(*a * s + *b)).collect(),
        CalibrationKind::Isotonic {
            breakpoints,
            values,
        } => raw
            .iter()
            .map(|&s| step_lookup(breakpoints, values, s))
            .collect(),
        CalibrationKind::Temperature { t } => raw.iter().map(|&z| sigmoid(z / *t)).collect(),
    }
}

/// Equal-width reliability bins over [0,1]; probability 1.0 lands in the
/// last bin. Empty bins keep count 0 with absent means.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityBins {
    pub bins: Vec<ReliabilityBin>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub mean_pred: Option<f64>,
    pub frac_pos: Option<f64>,
    pub count: usize,
}

pub fn reliability_bins<F: Float>(probs: &[F], labels: &[u8], n_bins: usize) -> ReliabilityBins {
    assert!(n_bins >= 1, "need at least one bin");
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
    let bins = (0..n_bins)
        .map(|b| ReliabilityBin {
            lo: b as f64 / n_bins as f64,
            hi: (b + 1) as f64 / n_bins as f64,
            mean_pred: (count[b] > 0).then(|| sum_p[b] / count[b] as f64),
            frac_pos: (count[b] > 0).then(|| sum_y[b] / count[b] as f64),
            count: count[b],
        })
        .collect();
    ReliabilityBins { bins }
}

impl ReliabilityBins {
    /// CSV with columns `bin_lo, bin_hi, mean_pred, frac_pos, count`; absent
    /// means serialize as empty cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,mean_pred,frac_pos,count")?;
        for b in &self.bins {
            writeln!(
                w,
                "{},{},{},{},{}",
                b.lo,
                b.hi,
                b.mean_pred.map_or(String::new(), |v| v.to_string()),
                b.frac_pos.map_or(String::new(), |v| v.to_string()),
                b.count
            )?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::auroc;
    use crate::rng::rng_from;
    use rand::Rng;

    fn nll_of_probs(probs: &[f64], labels: &[u8]) -> f64 {
        let eps = 1e-12;
        probs
            .iter()
            .zip(labels)
            .map(|(&p, &y)| {
                let p = p.clamp(eps, 1.0 - eps);
                if y == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / labels.len() as f64
    }

    #[test]
    fn platt_orientation_preserved_and_repaired() {
        let mut rng = rng_from(2);
        let n = 400;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| (y as f64 * 2.0 - 1.0) + rng.gen_range(-1.0..1.0))
            .collect();
        let map = fit_platt(&scores, &labels).unwrap();
        let CalibrationKind::Platt { a, .. } = map.kind else {
            unreachable!()
        };
        assert!(a > 0.0);

        let inverted: Vec<f64> = scores.iter().map(|&s| -s).collect();
        let map = fit_platt(&inverted, &labels).unwrap();
        let CalibrationKind::Platt { a, .. } = map.kind else {
            unreachable!()
        };
        assert!(a < 0.0);
    }

    #[test]
    fn platt_beats_dense_grid() {
        let mut rng = rng_from(4);
        let scores: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut labels: Vec<u8> = scores
            .iter()
            .map(|&s| (s + rng.gen_range(-1.0..1.0) > 0.0) as u8)
            .collect();
        labels[0] = 1;
        labels[1] = 0;
        let map = fit_platt(&scores, &labels).unwrap();

        let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let (hi, lo) = ((n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0));
        let objective = |a: f64, b: f64| -> f64 {
            scores
                .iter()
                .zip(&labels)
                .map(|(&s, &y)| {
                    let t = if y == 1 { hi } else { lo };
                    let z = a * s + b;
                    z.max(0.0) - t * z + (-z.abs()).exp().ln_1p()
                })
                .sum()
        };
        let mut grid_best = f64::INFINITY;
        for ai in 0..100 {
            for bi in 0..100 {
                let a = -10.0 + 20.0 * ai as f64 / 99.0;
                let b = -10.0 + 20.0 * bi as f64 / 99.0;
                grid_best = grid_best.min(objective(a, b));
            }
        }
        assert!(
            map.meta.final_loss <= grid_best + 1e-9,
            "newton {} vs grid {grid_best}",
            map.meta.final_loss
        );
    }

    #[test]
    fn isotonic_identity_when_already_monotone() {
        let scores = vec![0.1f64, 0.2, 0.6, 0.9];
        let labels = vec![0u8, 0, 1, 1];
        let map = fit_isotonic_pav(&scores, &labels).unwrap();
        let out = apply_calibration(&map, &scores);
        assert_eq!(out, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(map.meta.final_loss, 0.0);
    }

    #[test]
    fn isotonic_single_pooled_block() {
        let map = fit_isotonic_pav(&[1.0f64, 2.0], &[1, 0]).unwrap();
        let out = apply_calibration(&map, &[1.0, 2.0]);
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn isotonic_clamps_outside_fitted_range() {
        let map = fit_isotonic_pav(&[0.2f64, 0.4, 0.8], &[0, 1, 1]).unwrap();
        let out = apply_calibration(&map, &[0.0, 1.0]);
        let fitted = apply_calibration(&map, &[0.2, 0.8]);
        assert_eq!(out[0], fitted[0]);
        assert_eq!(out[1], fitted[1]);
    }

    /// Exhaustive monotone-block-partition oracle for PAV on n = 8: every
    /// contiguous partition whose block means are non-decreasing is feasible;
    /// the optimum must match PAV's squared error.
    #[test]
    fn pav_equals_partition_oracle() {
        let mut rng = rng_from(13);
        for _ in 0..60 {
            let n = 8;
            let mut scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
            scores.dedup();
            let n = scores.len();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();

            let map = fit_isotonic_pav(&scores, &labels).unwrap();
            let pav_sse = map.meta.final_loss;

            let mut best = f64::INFINITY;
            for mask in 0..(1u32 << (n - 1)) {
                let mut blocks: Vec<(usize, usize)> = Vec::new();
                let mut start = 0;
                for cut in 0..n - 1 {
                    if mask & (1 << cut) != 0 {
                        blocks.push((start, cut + 1));
                        start = cut + 1;
                    }
                }
                blocks.push((start, n));
                let means: Vec<f64> = blocks
                    .iter()
                    .map(|&(s, e)| {
                        labels[s..e].iter().map(|&y| y as f64).sum::<f64>() / (e - s) as f64
                    })
                    .collect();
                if means.windows(2).any(|w| w[0] > w[1]) {
                    continue;
                }
                let sse: f64 = blocks
                    .iter()
                    .zip(&means)
                    .map(|(&(s, e), &m)| {
                        labels[s..e]
                            .iter()
                            .map(|&y| (y as f64 - m) * (y as f64 - m))
                            .sum::<f64>()
                    })
                    .sum();
                best = best.min(sse);
            }
            assert!(
                (pav_sse - best).abs() < 1e-9,
                "pav {pav_sse} vs oracle {best}"
            );
        }
    }

    #[test]
    fn isotonic_values_non_decreasing() {
        let mut rng = rng_from(21);
        for _ in 0..100 {
            let n = rng.gen_range(2..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let map = fit_isotonic_pav(&scores, &labels).unwrap();
            let CalibrationKind::Isotonic { values, .. } = &map.kind else {
                unreachable!()
            };
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
            assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    /// Empirical conditionals built to equal sigmoid(z) exactly: 3 of 4
    /// samples positive at z = ln 3, 1 of 4 at z = -ln 3. Log-loss is proper,
    /// so the sample NLL is minimized at temperature exactly 1.
    #[test]
    fn temperature_recovers_unit_and_scaled() {
        let z = 3.0f64.ln();
        let logits = vec![z, z, z, z, -z, -z, -z, -z];
        let labels = vec![1u8, 1, 1, 0, 0, 0, 0, 1];
        let map = fit_temperature(&logits, &labels).unwrap();
        let CalibrationKind::Temperature { t } = map.kind else {
            unreachable!()
        };
        assert!((t - 1.0).abs() < 1e-3, "t = {t}");

        let overconfident: Vec<f64> = logits.iter().map(|&v| v * 3.0).collect();
        let map = fit_temperature(&overconfident, &labels).unwrap();
        let CalibrationKind::Temperature { t } = map.kind else {
            unreachable!()
        };
        assert!((t - 3.0).abs() < 0.1, "t = {t}");
    }

    #[test]
    fn temperature_preserves_auroc_exactly() {
        let mut rng = rng_from(8);
        let logits: Vec<f64> = (0..200).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let labels: Vec<u8> = logits
            .iter()
            .map(|&z| (z + rng.gen_range(-2.0..2.0) > 0.0) as u8)
            .collect();
        let before: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
        let map = fit_temperature(&logits, &labels).unwrap();
        let after = apply_calibration(&map, &logits);
        assert_eq!(
            auroc(&before, &labels).unwrap(),
            auroc(&after, &labels).unwrap()
        );
    }

    #[test]
    fn apply_trivial_maps() {
        let map = CalibrationMap {
            kind: CalibrationKind::Platt { a: 1.0f64, b: 0.0 },
            meta: FitMeta {
                n_samples: 0,
                final_loss: 0.0,
            },
        };
        let out = apply_calibration(&map, &[0.0, 2.0]);
        assert_eq!(out, vec![0.5, sigmoid(2.0)]);

        let map = CalibrationMap {
            kind: CalibrationKind::Temperature { t: 1.0f64 },
            meta: FitMeta {
                n_samples: 0,
                final_loss: 0.0,
            },
        };
        assert_eq!(apply_calibration(&map, &[1.5]), vec![sigmoid(1.5)]);
    }

    #[test]
    fn nll_non_increase_for_all_three_fitters() {
        let mut rng = rng_from(33);
        for trial in 0..50 {
            let n = rng.gen_range(20..80);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.4) as u8).collect();
            if labels.iter().all(|&y| y == labels[0]) {
                continue;
            }
            // noisy logits, deliberately mis-scaled
            let scale = rng.gen_range(0.3..4.0);
            let logits: Vec<f64> = labels
                .iter()
                .map(|&y| scale * ((y as f64 * 2.0 - 1.0) + rng.gen_range(-1.5..1.5)))
                .collect();
            let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();

            // temperature: raw-label NLL against the identity temperature
            let map = fit_temperature(&logits, &labels).unwrap();
            let after = apply_calibration(&map, &logits);
            assert!(nll_of_probs(&after, &labels) <= nll_of_probs(&probs, &labels) + 1e-12);

            // isotonic on probabilities: raw-label NLL non-increase
            let map = fit_isotonic_pav(&probs, &labels).unwrap();
            let after = apply_calibration(&map, &probs);
            assert!(nll_of_probs(&after, &labels) <= nll_of_probs(&probs, &labels) + 1e-12);

            // Platt: smoothed-target objective against the identity (1, 0)
            let map = fit_platt(&logits, &labels).unwrap();
            let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
            let n_neg = labels.len() as f64 - n_pos;
            let (hi, lo) = ((n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0));
            let identity_obj: f64 = logits
                .iter()
                .zip(&labels)
                .map(|(&z, &y)| {
                    let t = if y == 1 { hi } else { lo };
                    z.max(0.0) - t * z + (-z.abs()).exp().ln_1p()
                })
                .sum();
            assert!(
                map.meta.final_loss <= identity_obj + 1e-9,
                "trial {trial}: platt {} vs identity {identity_obj}",
                map.meta.final_loss
            );
        }
    }

    #[test]
    fn platt_preserves_ranking_when_positive() {
        let mut rng = rng_from(44);
        let scores: Vec<f64> = (0..100).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let labels: Vec<u8> = scores
            .iter()
            .map(|&s| (s + rng.gen_range(-1.0..1.0) > 0.0) as u8)
            .collect();
        let map = fit_platt(&scores, &labels).unwrap();
        let CalibrationKind::Platt { a, .. } = map.kind else {
            unreachable!()
        };
        assert!(a > 0.0);
        let after = apply_calibration(&map, &scores);
        assert_eq!(
            auroc(&scores, &labels).unwrap(),
            auroc(&after, &labels).unwrap()
        );
    }

    #[test]
    fn reliability_bins_cases() {
        // single occupied bin, zero gap
        let bins = reliability_bins(&[0.5f64; 4], &[1, 0, 1, 0], 10);
        let occupied: Vec<&ReliabilityBin> =
            bins.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].mean_pred, Some(0.5));
        assert_eq!(occupied[0].frac_pos, Some(0.5));

        // two-bin hand case with 0.1 gaps
        let probs = vec![0.1f64, 0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9];
        let labels = vec![0u8, 0, 0, 0, 1, 1, 1, 1];
        let bins = reliability_bins(&probs, &labels, 10);
        assert_eq!(bins.bins[1].count, 4);
        assert_eq!(bins.bins[9].count, 4);
        assert_eq!(bins.bins[0].count, 0);
        assert_eq!(bins.bins[0].mean_pred, None);

        // n_bins = 1 aggregates everything
        let bins = reliability_bins(&probs, &labels, 1);
        assert_eq!(bins.bins[0].count, 8);
        assert!((bins.bins[0].mean_pred.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(bins.bins[0].frac_pos, Some(0.5));

        // probability 1.0 lands in the last bin
        let bins = reliability_bins(&[1.0f64], &[1], 10);
        assert_eq!(bins.bins[9].count, 1);
    }

    #[test]
    fn reliability_csv_shape() {
        let bins = reliability_bins(&[0.1f64, 0.9], &[0, 1], 5);
        let mut buf = Vec::new();
        bins.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("bin_lo,bin_hi,mean_pred,frac_pos,count"));
    }
}
