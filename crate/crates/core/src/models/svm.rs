//! Linear max-margin model fitted by primal subgradient descent on
//! hinge loss + L2 (Pegasos-style step sizes) with averaged iterates.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from;
use crate::Float;

use super::{check_both_classes, check_dim, ProbClassifier};

/// Margin slack used when collecting support vectors.
pub const SUPPORT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMaxMarginModel<F> {
    pub weights: Vec<F>,
    pub bias: F,
    pub reg_lambda: F,
    pub epochs: usize,
    /// Best hinge+L2 objective among epoch-end averaged iterates seen so
    /// far; non-increasing by construction.
    pub objective_trace: Vec<F>,
}

impl<F: Float> LinearMaxMarginModel<F> {
    /// Signed decision values `w . x + b`.
    pub fn decision_function(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        check_dim(self.weights.len(), features)?;
        Ok(features
            .iter_rows()
            .map(|row| {
                row.iter()
                    .zip(&self.weights)
                    .fold(self.bias, |acc, (&x, &w)| acc + x * w)
            })
            .collect())
    }

    /// Per-sample margins `y_pm * (w . x + b)` with labels mapped to +/-1.
    pub fn margins(&self, features: &Matrix<F>, labels: &[u8]) -> Result<Vec<F>> {
        Ok(self
            .decision_function(features)?
            .into_iter()
            .zip(labels)
            .map(|(f, &y)| if y == 1 { f } else { -f })
            .collect())
    }

    /// Indices with `|margin| <= 1 + SUPPORT_TOLERANCE`.
    pub fn support_indices(&self, features: &Matrix<F>, labels: &[u8]) -> Result<Vec<usize>> {
        let tol = F::one() + F::cast(SUPPORT_TOLERANCE);
        Ok(self
            .margins(features, labels)?
            .into_iter()
            .enumerate()
            .filter(|(_, m)| m.abs() <= tol)
            .map(|(i, _)| i)
            .collect())
    }

    /// Hinge + L2 objective at the stored parameters.
    pub fn objective(&self, features: &Matrix<F>, labels: &[u8]) -> Result<F> {
        let margins = self.margins(features, labels)?;
        let hinge: F = margins
            .iter()
            .map(|&m| (F::one() - m).max(F::zero()))
            .fold(F::zero(), |a, b| a + b);
        let half = F::cast(0.5);
        let sq: F = self.weights.iter().fold(F::zero(), |a, &w| a + w * w);
        Ok(half * self.reg_lambda * sq + hinge / F::cast(labels.len() as f64))
    }
}

impl<F: Float> ProbClassifier<F> for LinearMaxMarginModel<F> {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn raw_scores(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        self.decision_function(features)
    }
}

/// Pegasos-style fit. Samples are visited in a seeded shuffled order each
/// epoch with step size `1/(lambda*t)`; the returned parameters are the
/// per-epoch averaged iterate with the lowest objective.
pub fn fit_linear_svm<F: Float>(
    features: &Matrix<F>,
    labels: &[u8],
    reg_lambda: F,
    epochs: usize,
    seed: u64,
) -> Result<LinearMaxMarginModel<F>> {
    check_both_classes(labels)?;
    let n = features.n_rows();
    let d = features.n_cols();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if reg_lambda <= F::zero() {
        return Err(Error::InvalidConfig("reg_lambda must be positive".into()));
    }

    let mut rng = rng_from(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![F::zero(); d];
    let mut b = F::zero();
    let mut steps = 0u64;

    let mut best: Option<LinearMaxMarginModel<F>> = None;
    let mut trace: Vec<F> = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut w_sum = vec![F::zero(); d];
        let mut b_sum = F::zero();
        for &i in &order {
            steps += 1;
            let eta = F::one() / (reg_lambda * F::cast(steps as f64));
            let row = features.row(i);
            let y = if labels[i] == 1 { F::one() } else { -F::one() };
            let margin = row.iter().zip(&w).fold(b, |acc, (&x, &wj)| acc + x * wj) * y;
            let decay = F::one() - eta * reg_lambda;
            for wj in w.iter_mut() {
                *wj = *wj * decay;
            }
            if margin < F::one() {
                for (wj, &x) in w.iter_mut().zip(row) {
                    *wj = *wj + eta * y * x;
                }
                b = b + eta * y;
            }
            for (s, &wj) in w_sum.iter_mut().zip(&w) {
                *s = *s + wj;
            }
            b_sum = b_sum + b;
        }

        let denom = F::cast(n as f64);
        let avg = LinearMaxMarginModel {
            weights: w_sum.iter().map(|&s| s / denom).collect(),
            bias: b_sum / denom,
            reg_lambda,
            epochs: epoch + 1,
            objective_trace: Vec::new(),
        };
        let obj = avg.objective(features, labels)?;
        if !obj.is_finite() {
            return Err(Error::DivergenceDetected);
        }
        let improved = best
            .as_ref()
            .map_or(true, |m| obj < *m.objective_trace.last().unwrap());
        if improved {
            let mut kept = avg;
            kept.objective_trace = vec![obj];
            best = Some(kept);
        }
        let last = *best.as_ref().unwrap().objective_trace.last().unwrap();
        trace.push(if improved { obj } else { last });
    }

    let mut model = best.ok_or(Error::InvalidConfig("epochs must be >= 1".into()))?;
    model.epochs = epochs;
    model.objective_trace = trace;
    Ok(model)
}
