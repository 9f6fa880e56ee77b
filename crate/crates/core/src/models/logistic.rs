//! L2-regularized logistic regression fitted by damped Newton iterations.

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::Float;

use super::{check_both_classes, check_dim, log_loss_term, sigmoid, ProbClassifier};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<F> {
    pub coefficients: Vec<F>,
    pub intercept: F,
    pub l2_lambda: F,
    pub converged: bool,
    pub n_iter: usize,
    /// Objective value after every accepted Newton step; non-increasing.
    pub loss_trace: Vec<F>,
}

impl<F: Float> ProbClassifier<F> for LogisticModel<F> {
    fn input_dim(&self) -> usize {
        self.coefficients.len()
    }

    fn raw_scores(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        check_dim(self.coefficients.len(), features)?;
        Ok(features
            .iter_rows()
            .map(|row| {
                row.iter()
                    .zip(&self.coefficients)
                    .fold(self.intercept, |acc, (&x, &w)| acc + x * w)
            })
            .collect())
    }
}

/// Mean negative log-likelihood plus `l2/2 * ||coef||^2` (intercept
/// unpenalized) at the given parameters.
pub fn regularized_nll<F: Float>(
    features: &Matrix<F>,
    labels: &[u8],
    weights: Option<&[F]>,
    coef: &[F],
    intercept: F,
    l2: F,
) -> F {
    let wsum = weight_sum(weights, labels.len());
    let mut nll = F::zero();
    for (i, row) in features.iter_rows().enumerate() {
        let z = row.iter().zip(coef).fold(intercept, |acc, (&x, &w)| acc + x * w);
        let wt = weights.map_or(F::one(), |w| w[i]);
        nll = nll + wt * log_loss_term(z, F::cast(labels[i] as f64));
    }
    let half = F::cast(0.5);
    nll / wsum + half * l2 * coef.iter().fold(F::zero(), |acc, &c| acc + c * c)
}

/// Analytic gradient of [`regularized_nll`] over `[coef.., intercept]`.
pub fn nll_and_gradient<F: Float>(
    features: &Matrix<F>,
    labels: &[u8],
    weights: Option<&[F]>,
    coef: &[F],
    intercept: F,
    l2: F,
) -> (F, Vec<F>) {
    let d = coef.len();
    let wsum = weight_sum(weights, labels.len());
    let mut grad = vec![F::zero(); d + 1];
    let mut nll = F::zero();
    for (i, row) in features.iter_rows().enumerate() {
        let z = row.iter().zip(coef).fold(intercept, |acc, (&x, &w)| acc + x * w);
        let wt = weights.map_or(F::one(), |w| w[i]);
        let y = F::cast(labels[i] as f64);
        nll = nll + wt * log_loss_term(z, y);
        let resid = wt * (sigmoid(z) - y);
        for (g, &x) in grad.iter_mut().zip(row) {
            *g = *g + resid * x;
        }
        grad[d] = grad[d] + resid;
    }
    for g in grad.iter_mut() {
        *g = *g / wsum;
    }
    for (g, &c) in grad.iter_mut().zip(coef) {
        *g = *g + l2 * c;
    }
    let half = F::cast(0.5);
    let obj = nll / wsum + half * l2 * coef.iter().fold(F::zero(), |acc, &c| acc + c * c);
    (obj, grad)
}

fn weight_sum<F: Float>(weights: Option<&[F]>, n: usize) -> F {
    weights.map_or(F::cast(n as f64), |w| {
        w.iter().fold(F::zero(), |acc, &x| acc + x)
    })
}

/// Fits by damped Newton: the step is halved (up to 20 times) whenever the
/// objective would increase, which keeps the recorded loss trace
/// non-increasing. Convergence when the gradient max-norm drops to `tol`.
pub fn fit_logistic<F: Float>(
    features: &Matrix<F>,
    labels: &[u8],
    l2_lambda: F,
    max_iter: usize,
    tol: F,
    weights: Option<&[F]>,
) -> Result<LogisticModel<F>> {
    check_both_classes(labels)?;
    let d = features.n_cols();
    if d == 0 {
        return Err(Error::InvalidConfig("need at least one feature".into()));
    }
    let n = features.n_rows();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }

    let mut coef = vec![F::zero(); d];
    let mut intercept = F::zero();
    let mut converged = false;
    let mut n_iter = 0;
    let mut loss_trace = Vec::new();

    let (mut obj, mut grad) =
        nll_and_gradient(features, labels, weights, &coef, intercept, l2_lambda);
    loss_trace.push(obj);

    for iter in 0..max_iter {
        n_iter = iter + 1;
        let grad_norm = grad
            .iter()
            .fold(F::zero(), |acc, g| if g.abs() > acc { g.abs() } else { acc });
        if grad_norm <= tol {
            converged = true;
            n_iter = iter;
            break;
        }

        // weighted Hessian over [coef.., intercept]
        let wsum = weight_sum(weights, n);
        let mut hess = Matrix::zeros(d + 1, d + 1);
        for (i, row) in features.iter_rows().enumerate() {
            let z = row
                .iter()
                .zip(&coef)
                .fold(intercept, |acc, (&x, &w)| acc + x * w);
            let p = sigmoid(z);
            let wt = weights.map_or(F::one(), |w| w[i]);
            let s = wt * p * (F::one() - p) / wsum;
            for a in 0..d {
                for b in a..d {
                    let v = hess.get(a, b) + s * row[a] * row[b];
                    hess.set(a, b, v);
                    hess.set(b, a, v);
                }
                let v = hess.get(a, d) + s * row[a];
                hess.set(a, d, v);
                hess.set(d, a, v);
            }
            let v = hess.get(d, d) + s;
            hess.set(d, d, v);
        }
        for a in 0..d {
            let v = hess.get(a, a) + l2_lambda;
            hess.set(a, a, v);
        }

        // solve H step = grad, escalating a diagonal jitter if the factorization fails
        let mut jitter = F::cast(1e-10);
        let step = loop {
            match solve_spd(&hess, &grad) {
                Ok(s) => break s,
                Err(_) => {
                    for a in 0..=d {
                        let v = hess.get(a, a) + jitter;
                        hess.set(a, a, v);
                    }
                    jitter = jitter * F::cast(10.0);
                    if jitter > F::cast(1e6) {
                        return Err(Error::DivergenceDetected);
                    }
                }
            }
        };

        // damping: halve the step until the objective does not increase
        let mut scale = F::one();
        let mut accepted = false;
        for _ in 0..20 {
            let trial_coef: Vec<F> = coef
                .iter()
                .zip(&step)
                .map(|(&c, &s)| c - scale * s)
                .collect();
            let trial_intercept = intercept - scale * step[d];
            let trial_obj = regularized_nll(
                features,
                labels,
                weights,
                &trial_coef,
                trial_intercept,
                l2_lambda,
            );
            if !trial_obj.is_finite() {
                return Err(Error::DivergenceDetected);
            }
            if trial_obj <= obj {
                coef = trial_coef;
                intercept = trial_intercept;
                obj = trial_obj;
                accepted = true;
                break;
            }
            scale = scale * F::cast(0.5);
        }
        if !accepted {
            // no step of any length improves the objective; treat as converged
            converged = true;
            break;
        }
        loss_trace.push(obj);
        let updated = nll_and_gradient(features, labels, weights, &coef, intercept, l2_lambda);
        obj = updated.0;
        grad = updated.1;
    }

    if !obj.is_finite() || coef.iter().any(|c| !c.is_finite()) || !intercept.is_finite() {
        return Err(Error::DivergenceDetected);
    }
    Ok(LogisticModel {
        coefficients: coef,
        intercept,
        l2_lambda,
        converged,
        n_iter,
        loss_trace,
    })
}
