//! From-scratch probabilistic classifiers: L2-regularized logistic
//! regression, gradient-boosted decision stumps, and a linear max-margin
//! model. All three expose a pre-sigmoid raw score; probabilities are the
//! logistic transform of that score.

mod logistic;
mod stumps;
mod svm;

pub use logistic::{fit_logistic, nll_and_gradient, regularized_nll, LogisticModel};
pub use stumps::{fit_stump_boost, Stump, StumpBoostModel};
pub use svm::{fit_linear_svm, LinearMaxMarginModel};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Float;

/// Numerically stable logistic function.
pub fn sigmoid<F: Float>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// Stable `ln(1 + exp(z)) - y*z`, the per-sample logistic loss at raw score `z`.
pub fn log_loss_term<F: Float>(z: F, y: F) -> F {
    let zero = F::zero();
    let pos = if z > zero { z } else { zero };
    pos - y * z + (-z.abs()).exp().ln_1p()
}

/// A fitted binary scorer. `raw_scores` are pre-sigmoid; `predict_proba` is
/// their logistic transform, elementwise in [0,1].
pub trait ProbClassifier<F: Float> {
    fn input_dim(&self) -> usize;

    fn raw_scores(&self, features: &Matrix<F>) -> Result<Vec<F>>;

    fn predict_proba(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        Ok(self
            .raw_scores(features)?
            .into_iter()
            .map(sigmoid)
            .collect())
    }
}

pub(crate) fn check_dim<F: Float>(model_dim: usize, features: &Matrix<F>) -> Result<()> {
    if features.n_cols() != model_dim {
        return Err(Error::DimensionMismatch {
            expected: model_dim,
            got: features.n_cols(),
        });
    }
    Ok(())
}

pub(crate) fn check_both_classes(labels: &[u8]) -> Result<()> {
    if !(labels.iter().any(|&y| y == 1) && labels.iter().any(|&y| y == 0)) {
        return Err(Error::SingleClassInput);
    }
    Ok(())
}

/// Any of the three fitted model families, for places that select a
/// classifier at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<F> {
    Logistic(LogisticModel<F>),
    StumpBoost(StumpBoostModel<F>),
    LinearSvm(LinearMaxMarginModel<F>),
}

impl<F: Float> ProbClassifier<F> for AnyModel<F> {
    fn input_dim(&self) -> usize {
        match self {
            AnyModel::Logistic(m) => m.input_dim(),
            AnyModel::StumpBoost(m) => m.input_dim(),
            AnyModel::LinearSvm(m) => m.input_dim(),
        }
    }

    fn raw_scores(&self, features: &Matrix<F>) -> Result<Vec<F>> {
        match self {
            AnyModel::Logistic(m) => m.raw_scores(features),
            AnyModel::StumpBoost(m) => m.raw_scores(features),
            AnyModel::LinearSvm(m) => m.raw_scores(features),
        }
    }
}

impl<F: Float> AnyModel<F> {
    /// Versioned JSON document with a type tag, parameters as `f64`, and
    /// training metadata, for reproducibility audits.
    pub fn to_json(&self) -> Value {
        let (kind, params, meta) = match self {
            AnyModel::Logistic(m) => (
                "logistic",
                json!({
                    "coefficients": m.coefficients.iter().map(|c| c.to64()).collect::<Vec<_>>(),
                    "intercept": m.intercept.to64(),
                    "l2_lambda": m.l2_lambda.to64(),
                }),
                json!({ "converged": m.converged, "n_iter": m.n_iter }),
            ),
            AnyModel::StumpBoost(m) => (
                "stump_boost",
                json!({
                    "base_score": m.base_score.to64(),
                    "stumps": m.stumps.iter().map(|s| json!({
                        "feature": s.feature,
                        "threshold": s.threshold.to64(),
                        "left": s.left.to64(),
                        "right": s.right.to64(),
                    })).collect::<Vec<_>>(),
                    "learning_rate": m.learning_rate.to64(),
                    "input_dim": m.input_dim(),
                }),
                json!({ "n_rounds": m.n_rounds }),
            ),
            AnyModel::LinearSvm(m) => (
                "linear_svm",
                json!({
                    "weights": m.weights.iter().map(|w| w.to64()).collect::<Vec<_>>(),
                    "bias": m.bias.to64(),
                    "reg_lambda": m.reg_lambda.to64(),
                }),
                json!({ "epochs": m.epochs }),
            ),
        };
        json!({ "version": 1, "kind": kind, "params": params, "meta": meta })
    }

    pub fn from_json(doc: &Value) -> Result<AnyModel<F>> {
        let bad = |msg: &str| Error::InvalidConfig(format!("model document: {msg}"));
        if doc["version"] != json!(1) {
            return Err(bad("unsupported version"));
        }
        let params = &doc["params"];
        let f = |v: &Value| -> Result<F> {
            v.as_f64()
                .map(F::cast)
                .ok_or_else(|| bad("expected number"))
        };
        match doc["kind"].as_str() {
            Some("logistic") => {
                let coefficients = params["coefficients"]
                    .as_array()
                    .ok_or_else(|| bad("coefficients"))?
                    .iter()
                    .map(f)
                    .collect::<Result<Vec<F>>>()?;
                Ok(AnyModel::Logistic(LogisticModel {
                    coefficients,
                    intercept: f(&params["intercept"])?,
                    l2_lambda: f(&params["l2_lambda"])?,
                    converged: doc["meta"]["converged"].as_bool().unwrap_or(false),
                    n_iter: doc["meta"]["n_iter"].as_u64().unwrap_or(0) as usize,
                    loss_trace: Vec::new(),
                }))
            }
            Some("stump_boost") => {
                let stumps = params["stumps"]
                    .as_array()
                    .ok_or_else(|| bad("stumps"))?
                    .iter()
                    .map(|s| {
                        Ok(Stump {
                            feature: s["feature"].as_u64().ok_or_else(|| bad("feature"))? as usize,
                            threshold: f(&s["threshold"])?,
                            left: f(&s["left"])?,
                            right: f(&s["right"])?,
                        })
                    })
                    .collect::<Result<Vec<Stump<F>>>>()?;
                Ok(AnyModel::StumpBoost(StumpBoostModel {
                    dim: params["input_dim"].as_u64().ok_or_else(|| bad("input_dim"))? as usize,
                    base_score: f(&params["base_score"])?,
                    stumps,
                    learning_rate: f(&params["learning_rate"])?,
                    n_rounds: doc["meta"]["n_rounds"].as_u64().unwrap_or(0) as usize,
                    loss_trace: Vec::new(),
                }))
            }
            Some("linear_svm") => {
                let weights = params["weights"]
                    .as_array()
                    .ok_or_else(|| bad("weights"))?
                    .iter()
                    .map(f)
                    .collect::<Result<Vec<F>>>()?;
                Ok(AnyModel::LinearSvm(LinearMaxMarginModel {
                    weights,
                    bias: f(&params["bias"])?,
                    reg_lambda: f(&params["reg_lambda"])?,
                    epochs: doc["meta"]["epochs"].as_u64().unwrap_or(0) as usize,
                    objective_trace: Vec::new(),
                }))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}
