//! Gradient boosting on logistic loss with depth-1 trees.
//!
//! Each round fits one stump to the negative gradient (the residual
//! `y - p`) by exhaustive search over features and midpoint thresholds,
//! minimizing squared error. Leaf values are folded into the stored stump
//! outputs, so the raw score of the model is `base_score` plus the sum of
//! stump outputs.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Float;

use super::{check_both_classes, check_dim, log_loss_term, sigmoid, ProbClassifier};

/// Axis-aligned split: `x[feature] < threshold` emits `left`, else `right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump<F> {
    pub feature: usize,
    pub threshold: F,
    pub left: F,
    pub right: F,
}

impl<F: Float> Stump<F> {
    pub fn output(&self, row: &[F]) -> F {
        if row[self.feature] < self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StumpBoostModel<F> {
    pub(crate) dim: usize,
    /// Prior log-odds of the training labels.
    pub base_score: F,
    /// Stump outputs already include the learning rate.
    pub stumps: Vec<Stump<F>>,
    pub learning_rate: F,
    pub n_rounds: usize,
    /// Training log-loss after the base score and after every kept round.
    pub loss_trace: Vec<F>,
}

impl<F: Float> ProbClassifier<F> for StumpBoostModel<F> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn raw_scores(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        check_dim(self.dim, features)?;
        Ok(features
            .iter_rows()
            .map(|row| {
                self.stumps
                    .iter()
                    .fold(self.base_score, |acc, s| acc + s.output(row))
            })
            .collect())
    }
}

/// Boosted-stump fit. The `seed` parameter is kept for interface stability;
/// the exhaustive split search is deterministic and does not consume it.
/// If a round would increase the training loss its contribution is halved up
/// to 10 times, then boosting stops, so the loss trace is non-increasing.
pub fn fit_stump_boost<F: Float>(
    features: &Matrix<F>,
    labels: &[u8],
    n_rounds: usize,
    learning_rate: F,
    _seed: u64,
    weights: Option<&[F]>,
) -> Result<StumpBoostModel<F>> {
    check_both_classes(labels)?;
    let n = features.n_rows();
    let d = features.n_cols();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }

    let wt = |i: usize| weights.map_or(F::one(), |w| w[i]);
    let wsum: F = (0..n).map(wt).fold(F::zero(), |a, b| a + b);

    // prior log-odds
    let pos_w: F = (0..n)
        .filter(|&i| labels[i] == 1)
        .map(wt)
        .fold(F::zero(), |a, b| a + b);
    let mean = (pos_w / wsum)
        .max(F::cast(1e-12))
        .min(F::one() - F::cast(1e-12));
    let base_score = (mean / (F::one() - mean)).ln();

    // per-feature sort orders, computed once
    let orders: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                features
                    .get(a, j)
                    .partial_cmp(&features.get(b, j))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let train_loss = |raw: &[F]| -> F {
        let mut loss = F::zero();
        for i in 0..n {
            loss = loss + wt(i) * log_loss_term(raw[i], F::cast(labels[i] as f64));
        }
        loss / wsum
    };

    let mut raw = vec![base_score; n];
    let mut loss = train_loss(&raw);
    let mut loss_trace = vec![loss];
    let mut stumps: Vec<Stump<F>> = Vec::with_capacity(n_rounds);

    let mut residual = vec![F::zero(); n];
    'rounds: for _ in 0..n_rounds {
        for i in 0..n {
            residual[i] = F::cast(labels[i] as f64) - sigmoid(raw[i]);
        }
        let total_s: F = (0..n)
            .map(|i| wt(i) * residual[i])
            .fold(F::zero(), |a, b| a + b);

        // best split: maximize SL^2/WL + SR^2/WR over (feature, midpoint)
        let mut best: Option<(F, usize, F, F, F)> = None; // (gain, feature, threshold, left, right)
        for (j, order) in orders.iter().enumerate() {
            let mut sl = F::zero();
            let mut wl = F::zero();
            for w in 0..n - 1 {
                let i = order[w];
                sl = sl + wt(i) * residual[i];
                wl = wl + wt(i);
                let here = features.get(i, j);
                let next = features.get(order[w + 1], j);
                if here == next {
                    continue;
                }
                let sr = total_s - sl;
                let wr = wsum - wl;
                if wl <= F::zero() || wr <= F::zero() {
                    continue;
                }
                let gain = sl * sl / wl + sr * sr / wr;
                let threshold = (here + next) / F::cast(2.0);
                let better = match &best {
                    None => true,
                    Some((g, ..)) => gain > *g,
                };
                if better {
                    best = Some((gain, j, threshold, sl / wl, sr / wr));
                }
            }
        }
        let Some((_, feature, threshold, left, right)) = best else {
            break; // all features constant
        };

        // shrink the round's contribution until the loss does not increase
        let mut scale = learning_rate;
        let mut accepted = false;
        for _ in 0..10 {
            let stump = Stump {
                feature,
                threshold,
                left: scale * left,
                right: scale * right,
            };
            let mut trial = raw.clone();
            for (i, r) in trial.iter_mut().enumerate() {
                *r = *r + stump.output(features.row(i));
            }
            let trial_loss = train_loss(&trial);
            if trial_loss <= loss {
                raw = trial;
                loss = trial_loss;
                stumps.push(stump);
                loss_trace.push(loss);
                accepted = true;
                break;
            }
            scale = scale * F::cast(0.5);
        }
        if !accepted {
            break 'rounds;
        }
    }

    Ok(StumpBoostModel {
        dim: d,
        base_score,
        stumps,
        learning_rate,
        n_rounds,
        loss_trace,
    })
}
