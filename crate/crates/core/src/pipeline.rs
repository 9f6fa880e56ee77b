//! End-to-end orchestration: split, standardize, optionally project,
//! oversample, filter, train, calibrate, select the operating threshold,
//! evaluate; plus parameter sweeps and the theorem-check harness.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::calibration::{
    apply_calibration, fit_isotonic_pav, fit_platt, fit_temperature, reliability_bins,
    CalibrationMap, ReliabilityBins,
};
use crate::dataset::{
    load_csv, make_gaussian_imbalanced, stratified_kfold, Dataset, FoldSplit, LabelColumn,
    NanPolicy, Standardizer, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    auroc, average_precision, bca_bootstrap, brier, confusion_at, delong_test, ece_mce,
    f_tilde_beta, prf_metrics, select_threshold, t_quantile_975, BootstrapConfig, MetricReport,
    OperatingPoint,
};
use crate::filter::{
    boundary_distance, density_score, estimate_epsilon, estimate_l_over_rho, fuse_and_select,
    pca_fit, pca_project, realism_score, train_discriminator, uncertainty_score, utility_score,
    CandidateHeads, FilterConfig, FilteredSet, TheoremDiagnostics,
};
use crate::linalg::Matrix;
use crate::models::{fit_linear_svm, fit_logistic, fit_stump_boost, AnyModel, ProbClassifier};
use crate::rng::derive_seed;
use crate::samplers::{generate, CandidateSet, SamplerConfig, SamplerFallback, SamplerMethod};
use crate::ARTIFACT_VERSION;

// stage tags for per-fold seed derivation; keeping stages on independent
// streams makes "empty filter output" runs bit-identical to the NONE baseline
const STAGE_SAMPLER: u64 = 1;
const STAGE_DISCRIMINATOR: u64 = 2;
const STAGE_FIT: u64 = 3;
const STAGE_BOOTSTRAP: u64 = 4;
const STAGE_SVM_SAMPLER: u64 = 5;

/// L2 penalty of the pilot scorer and final logistic classifier.
pub const LOGISTIC_L2: f64 = 1e-3;
const LOGISTIC_MAX_ITER: usize = 200;
const LOGISTIC_TOL: f64 = 1e-8;
/// Boosting schedule of the final stump classifier.
pub const STUMP_ROUNDS: usize = 200;
pub const STUMP_RATE: f64 = 0.1;
/// Schedule of the linear max-margin classifier / SVM-SMOTE margin model.
pub const SVM_LAMBDA: f64 = 1e-2;
pub const SVM_EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: String,
        label: LabelColumn,
        impute_mean: bool,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    StumpBoost,
    LinearSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationPolicy {
    /// Isotonic for boosted stumps, Platt otherwise.
    Auto,
    Platt,
    Isotonic,
    Temperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub enabled: bool,
    pub n_resamples: usize,
    pub confidence: f64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            enabled: true,
            n_resamples: 2000,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub sampler: SamplerConfig,
    pub filter: FilterConfig,
    pub classifier: ClassifierKind,
    pub calibration: CalibrationPolicy,
    pub betas: Vec<f64>,
    /// Precision floor for threshold selection.
    pub p0: f64,
    pub cv_folds: usize,
    pub bootstrap: BootstrapSettings,
    pub pca_target_dim: Option<usize>,
    pub ece_bins: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: DataSource::Synthetic(SyntheticSpec::default()),
            sampler: SamplerConfig::default(),
            filter: FilterConfig::default(),
            classifier: ClassifierKind::Logistic,
            calibration: CalibrationPolicy::Auto,
            betas: vec![1.0, 2.0, 4.0],
            p0: 0.9,
            cv_folds: 5,
            bootstrap: BootstrapSettings::default(),
            pca_target_dim: None,
            ece_bins: 10,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.filter.validate()?;
        if !(0.0 < self.p0 && self.p0 < 1.0) {
            return Err(Error::InvalidConfig("p0 must lie in (0,1)".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidConfig("cv_folds must be >= 2".into()));
        }
        if self.betas.is_empty() || self.betas.iter().any(|&b| b < 1.0) {
            return Err(Error::InvalidConfig("betas must be >= 1".into()));
        }
        if self.ece_bins == 0 {
            return Err(Error::InvalidConfig("ece_bins must be >= 1".into()));
        }
        if let DataSource::Synthetic(spec) = &self.source {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Stable hash of the resolved configuration (sorted-key JSON, SHA-256,
    /// first 16 hex chars).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.to_json()).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_source(source: &DataSource) -> Result<Dataset<f64>> {
    match source {
        DataSource::Csv {
            path,
            label,
            impute_mean,
        } => {
            let policy = if *impute_mean {
                NanPolicy::ImputeMean
            } else {
                NanPolicy::Reject
            };
            load_csv(path, label, policy)
        }
        DataSource::Synthetic(spec) => make_gaussian_imbalanced(spec),
    }
}

/// One fold's outputs.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub report: MetricReport,
    pub operating_point: OperatingPoint,
    pub diagnostics: Option<TheoremDiagnostics>,
    pub generated: usize,
    pub retained: usize,
    pub sampler_fallback: Option<SamplerFallback>,
    /// Filtering was configured but skipped for lack of trainable data.
    pub filter_skipped: bool,
    pub reliability: ReliabilityBins,
    pub artifacts: Option<FoldArtifacts>,
}

/// Candidate-level artifacts kept only when requested. Features live in the
/// working space of the fold: standardized and, when configured, projected.
#[derive(Debug, Clone)]
pub struct FoldArtifacts {
    pub candidates: CandidateSet<f64>,
    pub scores: Option<FilteredSet<f64>>,
    pub augmented_features: Matrix<f64>,
    pub augmented_labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub folds: Vec<FoldOutcome>,
    pub aggregate: BTreeMap<String, Aggregate>,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep per-fold candidate sets and score tables in the result.
    pub keep_artifacts: bool,
}

pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunResult> {
    run_pipeline_with(config, &RunOptions::default())
}

pub fn run_pipeline_with(config: &ExperimentConfig, options: &RunOptions) -> Result<RunResult> {
    config.validate()?;
    let data = load_source(&config.source)?;
    let splits = stratified_kfold(&data, config.cv_folds, config.seed)?;

    let mut folds = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let fold_seed = derive_seed(config.seed, 1000 + fold as u64);
        let mut evaluated = run_fold(&data, split, config, fold_seed, options)
            .map_err(|e| e.in_fold(fold))?;
        evaluated.outcome.fold = fold;
        folds.push(evaluated.outcome);
    }

    let aggregate = aggregate_folds(&folds);
    Ok(RunResult {
        config: config.clone(),
        config_hash: config.hash(),
        folds,
        aggregate,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

fn aggregate_folds(folds: &[FoldOutcome]) -> BTreeMap<String, Aggregate> {
    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for f in folds {
        for (k, v) in f.report.metric_values() {
            series.entry(k).or_default().push(v);
        }
    }
    series
        .into_iter()
        .map(|(k, vs)| {
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let (lo, hi) = if vs.len() > 1 {
                let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                let half = t_quantile_975(vs.len() - 1) * (var / n).sqrt();
                (mean - half, mean + half)
            } else {
                (mean, mean)
            };
            (
                k,
                Aggregate {
                    mean,
                    ci_lo: lo,
                    ci_hi: hi,
                },
            )
        })
        .collect()
}

struct FittedScorer {
    model: AnyModel<f64>,
    map: CalibrationMap<f64>,
    /// Isotonic consumes probabilities; Platt and temperature consume the
    /// raw (pre-sigmoid) score.
    takes_prob: bool,
}

impl FittedScorer {
    fn predict(&self, features: &Matrix<f64>) -> Result<Vec<f64>> {
        let input = if self.takes_prob {
            self.model.predict_proba(features)?
        } else {
            self.model.raw_scores(features)?
        };
        Ok(apply_calibration(&self.map, &input))
    }
}

fn fit_classifier(
    kind: ClassifierKind,
    features: &Matrix<f64>,
    labels: &[u8],
    seed: u64,
) -> Result<AnyModel<f64>> {
    Ok(match kind {
        ClassifierKind::Logistic => AnyModel::Logistic(fit_logistic(
            features,
            labels,
            LOGISTIC_L2,
            LOGISTIC_MAX_ITER,
            LOGISTIC_TOL,
            None,
        )?),
        ClassifierKind::StumpBoost => AnyModel::StumpBoost(fit_stump_boost(
            features,
            labels,
            STUMP_ROUNDS,
            STUMP_RATE,
            seed,
            None,
        )?),
        ClassifierKind::LinearSvm => AnyModel::LinearSvm(fit_linear_svm(
            features, labels, SVM_LAMBDA, SVM_EPOCHS, seed,
        )?),
    })
}

fn fit_calibration(
    policy: CalibrationPolicy,
    classifier: ClassifierKind,
    model: &AnyModel<f64>,
    valid_x: &Matrix<f64>,
    valid_y: &[u8],
) -> Result<(CalibrationMap<f64>, bool)> {
    let effective = match policy {
        CalibrationPolicy::Auto => match classifier {
            ClassifierKind::StumpBoost => CalibrationPolicy::Isotonic,
            _ => CalibrationPolicy::Platt,
        },
        other => other,
    };
    match effective {
        CalibrationPolicy::Isotonic => {
            let probs = model.predict_proba(valid_x)?;
            Ok((fit_isotonic_pav(&probs, valid_y)?, true))
        }
        CalibrationPolicy::Platt => {
            let raw = model.raw_scores(valid_x)?;
            Ok((fit_platt(&raw, valid_y)?, false))
        }
        CalibrationPolicy::Temperature => {
            let raw = model.raw_scores(valid_x)?;
            Ok((fit_temperature(&raw, valid_y)?, false))
        }
        CalibrationPolicy::Auto => unreachable!(),
    }
}

/// A fold outcome together with the calibrated test probabilities, which the
/// theorem harness pairs across branches.
struct EvaluatedFold {
    outcome: FoldOutcome,
    test_probs: Vec<f64>,
    test_labels: Vec<u8>,
}

fn run_fold(
    data: &Dataset<f64>,
    split: &FoldSplit,
    config: &ExperimentConfig,
    fold_seed: u64,
    options: &RunOptions,
) -> Result<EvaluatedFold> {
    if !split.covers_exactly(data.n()) {
        return Err(Error::InvalidConfig(
            "fold split does not partition the dataset".into(),
        ));
    }

    let impute = matches!(&config.source, DataSource::Csv { impute_mean: true, .. });
    let standardizer = Standardizer::fit(data.features(), &split.train_indices, impute);
    let mut x_train = standardizer.transform(data.features(), &split.train_indices);
    let mut x_valid = standardizer.transform(data.features(), &split.valid_indices);
    let mut x_test = standardizer.transform(data.features(), &split.test_indices);
    let y_train: Vec<u8> = split.train_indices.iter().map(|&i| data.labels()[i]).collect();
    let y_valid: Vec<u8> = split.valid_indices.iter().map(|&i| data.labels()[i]).collect();
    let y_test: Vec<u8> = split.test_indices.iter().map(|&i| data.labels()[i]).collect();

    if let Some(r) = config.pca_target_dim {
        let proj = pca_fit(&x_train, r.min(x_train.n_cols()))?;
        x_train = pca_project(&proj, &x_train);
        x_valid = pca_project(&proj, &x_valid);
        x_test = pca_project(&proj, &x_test);
    }

    // pilot scorer on the unaugmented training split defines the boundary
    // surrogate during filtering
    let pilot = fit_logistic(
        &x_train,
        &y_train,
        LOGISTIC_L2,
        LOGISTIC_MAX_ITER,
        LOGISTIC_TOL,
        None,
    )?;
    let pilot_valid = pilot.predict_proba(&x_valid)?;
    let pilot_op = select_threshold(&pilot_valid, &y_valid, config.p0)?;
    let t_pilot = pilot_op.threshold;

    let names: Vec<String> = (0..x_train.n_cols()).map(|j| format!("f{j}")).collect();
    let train_view = Dataset::new(x_train.clone(), y_train.clone(), names)?;
    let minority_rows = train_view.class_indices(1);
    let minority = x_train.select_rows(&minority_rows);

    // candidate generation
    let mut sampler_cfg = config.sampler;
    sampler_cfg.seed = derive_seed(fold_seed, STAGE_SAMPLER);
    let candidates: CandidateSet<f64> = if config.sampler.method == SamplerMethod::None {
        CandidateSet::empty(x_train.n_cols())
    } else {
        let svm_model = if config.sampler.method == SamplerMethod::SvmSmote {
            Some(fit_linear_svm(
                &x_train,
                &y_train,
                SVM_LAMBDA,
                SVM_EPOCHS,
                derive_seed(fold_seed, STAGE_SVM_SAMPLER),
            )?)
        } else {
            None
        };
        generate(&train_view, &sampler_cfg, svm_model.as_ref())?
    };
    let generated = candidates.len();
    let sampler_fallback = candidates.fallback;

    // filtering
    let mut diagnostics = None;
    let mut scores: Option<FilteredSet<f64>> = None;
    let mut filter_skipped = false;
    let retained_rows: Vec<usize> = if candidates.is_empty() {
        Vec::new()
    } else if !config.filter.enabled {
        (0..candidates.len()).collect()
    } else if candidates.len() < 5 || minority.n_rows() < 5 {
        filter_skipped = true;
        Vec::new()
    } else {
        let disc = train_discriminator(
            &minority,
            &candidates,
            derive_seed(fold_seed, STAGE_DISCRIMINATOR),
        )?;
        let s_real = realism_score(&disc.model, &candidates.points)?;
        let p_cand = pilot.predict_proba(&candidates.points)?;
        let d = boundary_distance(&p_cand, t_pilot);
        let heads = CandidateHeads {
            s_util: utility_score(&d, config.filter.alpha),
            s_unc: uncertainty_score(&p_cand),
            s_den: density_score(
                &candidates.points,
                &minority,
                config.sampler.k_neighbors.min(minority.n_rows()),
            )?,
            s_real,
        };
        let filtered = fuse_and_select(&heads, &candidates.points, &config.filter)?;
        let epsilon = estimate_epsilon(&disc.model, &disc.holdout_synthetic, config.filter.eta)?;
        let l_rho = estimate_l_over_rho(&pilot, &minority, t_pilot)?;
        diagnostics = Some(TheoremDiagnostics {
            epsilon_hat: epsilon,
            lipschitz_over_reach_hat: l_rho,
            boundary_threshold_t: t_pilot,
        });
        let rows = filtered.retained_indices();
        scores = Some(filtered);
        rows
    };
    let retained = retained_rows.len();
    debug_assert!(retained <= generated);

    // final training set: train plus retained synthetic rows labeled positive
    let (x_final, y_final) = if retained_rows.is_empty() {
        (x_train.clone(), y_train.clone())
    } else {
        let synth = candidates.points.select_rows(&retained_rows);
        let mut y = y_train.clone();
        y.extend(std::iter::repeat(1u8).take(synth.n_rows()));
        (x_train.vstack(&synth), y)
    };
    let model = fit_classifier(
        config.classifier,
        &x_final,
        &y_final,
        derive_seed(fold_seed, STAGE_FIT),
    )?;

    // calibrate on validation, then select the operating threshold there
    let (map, takes_prob) =
        fit_calibration(config.calibration, config.classifier, &model, &x_valid, &y_valid)?;
    let scorer = FittedScorer {
        model,
        map,
        takes_prob,
    };
    let cal_valid = scorer.predict(&x_valid)?;
    let operating_point = select_threshold(&cal_valid, &y_valid, config.p0)?;
    let t = operating_point.threshold;

    // evaluate on the test fold
    let cal_test = scorer.predict(&x_test)?;
    let report = build_report(
        &cal_test,
        &y_test,
        t,
        operating_point.feasible,
        config,
        derive_seed(fold_seed, STAGE_BOOTSTRAP),
    )?;
    let reliability = reliability_bins(&cal_test, &y_test, config.ece_bins);

    let outcome = FoldOutcome {
        fold: 0,
        report,
        operating_point,
        diagnostics,
        generated,
        retained,
        sampler_fallback,
        filter_skipped,
        reliability,
        artifacts: options.keep_artifacts.then(|| FoldArtifacts {
            candidates,
            scores,
            augmented_features: x_final,
            augmented_labels: y_final,
        }),
    };
    Ok(EvaluatedFold {
        outcome,
        test_probs: cal_test,
        test_labels: y_test,
    })
}

/// Runs the first fold only, keeping candidate artifacts; backs the CLI
/// `augment` subcommand.
pub fn augment_once(config: &ExperimentConfig) -> Result<FoldOutcome> {
    config.validate()?;
    let data = load_source(&config.source)?;
    let splits = stratified_kfold(&data, config.cv_folds, config.seed)?;
    let fold_seed = derive_seed(config.seed, 1000);
    let evaluated = run_fold(
        &data,
        &splits[0],
        config,
        fold_seed,
        &RunOptions {
            keep_artifacts: true,
        },
    )
    .map_err(|e| e.in_fold(0))?;
    Ok(evaluated.outcome)
}

fn build_report(
    probs: &[f64],
    labels: &[u8],
    threshold: f64,
    feasible: bool,
    config: &ExperimentConfig,
    bootstrap_seed: u64,
) -> Result<MetricReport> {
    let confusion = confusion_at(probs, labels, threshold);
    let base = prf_metrics(&confusion, 1.0);
    let pi1 = labels.iter().filter(|&&y| y == 1).count() as f64 / labels.len() as f64;

    let mut f_beta = Vec::with_capacity(config.betas.len());
    let mut f_tilde = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        f_beta.push((beta, prf_metrics(&confusion, beta).f_beta));
        f_tilde.push((beta, f_tilde_beta(probs, labels, threshold, beta, pi1)?));
    }

    let (ece, mce) = ece_mce(probs, labels, config.ece_bins);
    let mut report = MetricReport {
        threshold,
        feasible,
        recall: base.recall,
        precision: base.precision,
        f1: base.f1,
        balanced_accuracy: base.balanced_accuracy,
        auroc: auroc(probs, labels)?,
        average_precision: average_precision(probs, labels)?,
        brier: brier(probs, labels),
        ece,
        mce,
        f_beta,
        f_tilde_beta: f_tilde,
        recall_ci: None,
        average_precision_ci: None,
        delong_p: None,
    };

    if config.bootstrap.enabled {
        let cfg = BootstrapConfig {
            n_resamples: config.bootstrap.n_resamples,
            confidence: config.bootstrap.confidence,
            seed: bootstrap_seed,
            stratified: false,
        };
        let recall_stat = move |p: &[f64], l: &[u8]| -> f64 {
            prf_metrics(&confusion_at(p, l, threshold), 1.0).recall
        };
        let iv = bca_bootstrap(recall_stat, probs, labels, &cfg)?;
        report.recall_ci = Some((iv.lo, iv.hi));
        let ap_stat =
            |p: &[f64], l: &[u8]| -> f64 { average_precision(p, l).unwrap_or(0.0) };
        let cfg_ap = BootstrapConfig {
            seed: derive_seed(bootstrap_seed, 1),
            ..cfg
        };
        let iv = bca_bootstrap(ap_stat, probs, labels, &cfg_ap)?;
        report.average_precision_ci = Some((iv.lo, iv.hi));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

impl RunResult {
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("artifact_version".into(), json!(ARTIFACT_VERSION));
        root.insert("config".into(), self.config.to_json());
        root.insert("config_hash".into(), json!(self.config_hash));
        root.insert("seed".into(), json!(self.config.seed));
        root.insert("timestamp_unix".into(), json!(self.timestamp_unix));

        let folds: Vec<Value> = self
            .folds
            .iter()
            .map(|f| {
                let mut m = Map::new();
                m.insert("fold".into(), json!(f.fold));
                m.insert("metrics".into(), f.report.to_json());
                m.insert(
                    "operating_point".into(),
                    serde_json::to_value(f.operating_point).unwrap(),
                );
                if let Some(d) = &f.diagnostics {
                    m.insert("diagnostics".into(), serde_json::to_value(d).unwrap());
                }
                m.insert("generated".into(), json!(f.generated));
                m.insert("retained".into(), json!(f.retained));
                if let Some(fb) = &f.sampler_fallback {
                    m.insert("sampler_fallback".into(), serde_json::to_value(fb).unwrap());
                }
                if f.filter_skipped {
                    m.insert("filter_skipped".into(), json!(true));
                }
                Value::Object(m)
            })
            .collect();
        root.insert("folds".into(), Value::Array(folds));

        let aggregate: Map<String, Value> = self
            .aggregate
            .iter()
            .map(|(k, a)| (k.clone(), serde_json::to_value(a).unwrap()))
            .collect();
        root.insert("aggregate".into(), Value::Object(aggregate));

        let mut diag = Map::new();
        let eps: Vec<f64> = self
            .folds
            .iter()
            .filter_map(|f| f.diagnostics.as_ref().map(|d| d.epsilon_hat))
            .collect();
        if !eps.is_empty() {
            diag.insert(
                "epsilon_hat_mean".into(),
                json!(eps.iter().sum::<f64>() / eps.len() as f64),
            );
        }
        let lr: Vec<f64> = self
            .folds
            .iter()
            .filter_map(|f| f.diagnostics.as_ref().and_then(|d| d.lipschitz_over_reach_hat))
            .collect();
        if !lr.is_empty() {
            diag.insert(
                "l_rho_hat_mean".into(),
                json!(lr.iter().sum::<f64>() / lr.len() as f64),
            );
        }
        if !diag.is_empty() {
            root.insert("diagnostics".into(), Value::Object(diag));
        }
        Value::Object(root)
    }

    /// Pretty JSON with sorted keys; byte-stable for a fixed config and seed
    /// apart from the `timestamp_unix` field.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes a run report. JSON is the full document; CSV is long format with
/// one row per fold and metric.
pub fn emit_report<P: AsRef<Path>>(
    result: &RunResult,
    format: ReportFormat,
    path: P,
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        ReportFormat::Json => {
            file.write_all(result.to_json_string().as_bytes())?;
            file.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            writeln!(file, "fold,metric,value")?;
            for f in &result.folds {
                for (k, v) in f.report.metric_values() {
                    writeln!(file, "{},{},{}", f.fold, k, crate::dataset::format_real(v))?;
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

/// Sensitivity-sweep grid; defaults follow the standard analysis grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambda_values: Vec<f64>,
    pub p0_values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub ratio_values: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            lambda_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            p0_values: vec![0.80, 0.85, 0.90, 0.95],
            k_values: vec![3, 5, 10],
            ratio_values: vec![1.0, 2.0, 4.0],
        }
    }
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<SweepCellKey> {
        let mut cells = Vec::new();
        for &lambda in &self.lambda_values {
            for &p0 in &self.p0_values {
                for &k in &self.k_values {
                    for &ratio in &self.ratio_values {
                        cells.push(SweepCellKey {
                            lambda,
                            p0,
                            k,
                            ratio,
                        });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCellKey {
    pub lambda: f64,
    pub p0: f64,
    pub k: usize,
    pub ratio: f64,
}

impl SweepCellKey {
    /// Cell seed derived from the base seed and the cell coordinates.
    pub fn derive_cell_seed(&self, base: u64) -> u64 {
        let mut s = derive_seed(base, self.lambda.to_bits());
        s = derive_seed(s, self.p0.to_bits());
        s = derive_seed(s, self.k as u64);
        derive_seed(s, self.ratio.to_bits())
    }
}

#[derive(Debug, Clone)]
pub struct SweepCellOutcome {
    pub key: SweepCellKey,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<(usize, Vec<(String, f64)>)>, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCellOutcome>,
}

/// Runs the Cartesian sweep. Cells execute independently on up to `jobs`
/// worker threads with per-cell derived seeds; failures are recorded and the
/// sweep continues. Output order is the deterministic grid order regardless
/// of scheduling.
pub fn run_sweep(base: &ExperimentConfig, grid: &SweepGrid, jobs: usize) -> Result<SweepResult> {
    base.validate()?;
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    let jobs = jobs.max(1).min(cells.len());

    let run_cell = |key: &SweepCellKey| -> SweepCellOutcome {
        let mut cfg = base.clone();
        cfg.filter.lambda = key.lambda;
        cfg.p0 = key.p0;
        cfg.sampler.k_neighbors = key.k;
        cfg.sampler.overgen_ratio = key.ratio;
        cfg.seed = key.derive_cell_seed(base.seed);
        let outcome = match run_pipeline(&cfg) {
            Ok(result) => Ok(result
                .folds
                .iter()
                .map(|f| (f.fold, f.report.metric_values()))
                .collect()),
            Err(e) => Err(e.to_string()),
        };
        SweepCellOutcome {
            key: *key,
            seed: cfg.seed,
            outcome,
        }
    };

    let outcomes: Vec<SweepCellOutcome> = if jobs == 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<SweepCellOutcome>>> =
            (0..cells.len()).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(run_cell(&cells[i]));
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("cell executed"))
            .collect()
    };
    Ok(SweepResult { cells: outcomes })
}

impl SweepResult {
    /// Long-format CSV: one row per cell, fold, and metric; failed cells are
    /// kept as `error` rows with the message in `note`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,p0,k_neighbors,overgen_ratio,fold,metric,value,note")?;
        for cell in &self.cells {
            let k = &cell.key;
            match &cell.outcome {
                Ok(folds) => {
                    for (fold, metrics) in folds {
                        for (name, value) in metrics {
                            writeln!(
                                w,
                                "{},{},{},{},{},{},{},",
                                k.lambda,
                                k.p0,
                                k.k,
                                k.ratio,
                                fold,
                                name,
                                crate::dataset::format_real(*value)
                            )?;
                        }
                    }
                }
                Err(msg) => {
                    writeln!(
                        w,
                        "{},{},{},{},,error,,{}",
                        k.lambda,
                        k.p0,
                        k.k,
                        k.ratio,
                        msg.replace(',', ";")
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

// ---------------------------------------------------------------------------
// theorem harness
// ---------------------------------------------------------------------------

/// Empirical verification report for the monotone-surrogate and
/// Brier-non-increase properties of filtered augmentation.
#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub config: ExperimentConfig,
    pub c1: f64,
    pub c2: f64,
    pub per_seed: Vec<SeedOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome {
    pub seed_index: usize,
    pub seed: u64,
    /// `(beta, f_tilde(filtered-augmented) - f_tilde(unaugmented))`.
    pub delta_f_tilde: Vec<(f64, f64)>,
    pub delta_brier: f64,
    pub epsilon_hat: f64,
    pub l_rho_hat: Option<f64>,
    /// `c1 * epsilon_hat + c2 * l_rho_hat`.
    pub bound_rhs: f64,
    pub recall_filtered: f64,
    pub recall_smote: f64,
    pub recall_none: f64,
    pub delong_p_vs_none: f64,
    pub f_check_pass: bool,
    pub brier_bound_pass: bool,
    pub brier_abs_pass: bool,
    pub recall_check_pass: bool,
}

impl TheoremReport {
    pub fn f_pass_count(&self) -> usize {
        self.per_seed.iter().filter(|s| s.f_check_pass).count()
    }
    pub fn brier_pass_count(&self) -> usize {
        self.per_seed
            .iter()
            .filter(|s| s.brier_bound_pass && s.brier_abs_pass)
            .count()
    }
    pub fn recall_pass_count(&self) -> usize {
        self.per_seed.iter().filter(|s| s.recall_check_pass).count()
    }

    /// Pass rule: the surrogate and recall checks hold in at least 80% of
    /// seeds and the Brier bound holds in all of them.
    pub fn all_pass(&self) -> bool {
        let n = self.per_seed.len();
        if n == 0 {
            return true;
        }
        self.f_pass_count() * 5 >= n * 4
            && self.recall_pass_count() * 5 >= n * 4
            && self.brier_pass_count() == n
    }

    pub fn to_json(&self) -> Value {
        let per_seed: Vec<Value> = self
            .per_seed
            .iter()
            .map(|s| {
                let mut m = Map::new();
                m.insert("seed_index".into(), json!(s.seed_index));
                m.insert("seed".into(), json!(s.seed));
                let deltas: Map<String, Value> = s
                    .delta_f_tilde
                    .iter()
                    .map(|(b, v)| (crate::evaluation::beta_key(*b), json!(v)))
                    .collect();
                m.insert("delta_f_tilde".into(), Value::Object(deltas));
                m.insert("delta_brier".into(), json!(s.delta_brier));
                m.insert("epsilon_hat".into(), json!(s.epsilon_hat));
                if let Some(lr) = s.l_rho_hat {
                    m.insert("l_rho_hat".into(), json!(lr));
                }
                m.insert("bound_rhs".into(), json!(s.bound_rhs));
                m.insert("recall_filtered".into(), json!(s.recall_filtered));
                m.insert("recall_smote".into(), json!(s.recall_smote));
                m.insert("recall_none".into(), json!(s.recall_none));
                m.insert("delong_p_vs_none".into(), json!(s.delong_p_vs_none));
                m.insert("f_check_pass".into(), json!(s.f_check_pass));
                m.insert("brier_bound_pass".into(), json!(s.brier_bound_pass));
                m.insert("brier_abs_pass".into(), json!(s.brier_abs_pass));
                m.insert("recall_check_pass".into(), json!(s.recall_check_pass));
                Value::Object(m)
            })
            .collect();
        json!({
            "artifact_version": ARTIFACT_VERSION,
            "config": self.config.to_json(),
            "config_hash": self.config.hash(),
            "c1": self.c1,
            "c2": self.c2,
            "n_seeds": self.per_seed.len(),
            "per_seed": per_seed,
            "summary": {
                "f_pass_count": self.f_pass_count(),
                "brier_pass_count": self.brier_pass_count(),
                "recall_pass_count": self.recall_pass_count(),
                "all_pass": self.all_pass(),
            },
        })
    }
}

/// Absolute Brier-change tolerance checked per seed alongside the
/// `c1*eps + c2*(L*rho)` bound.
pub const BRIER_ABS_TOLERANCE: f64 = 0.02;

/// Runs three branches per replication seed on a fresh synthetic draw —
/// unaugmented, plain SMOTE, and filtered SMOTE — on the same fold and the
/// same stage seeds, and checks the surrogate improvement, the Brier bound
/// `delta <= c1*eps + c2*(L*rho)`, and the recall comparison against SMOTE.
pub fn theorem_check(
    spec: &SyntheticSpec,
    config: &ExperimentConfig,
    n_seeds: usize,
    c1: f64,
    c2: f64,
) -> Result<TheoremReport> {
    config.validate()?;
    let mut per_seed = Vec::with_capacity(n_seeds);
    for seed_index in 0..n_seeds {
        let seed = derive_seed(config.seed, 7000 + seed_index as u64);
        let mut draw = spec.clone();
        draw.seed = seed;
        let data = make_gaussian_imbalanced::<f64>(&draw)?;
        let splits = stratified_kfold(&data, config.cv_folds, seed)?;
        let split = &splits[0];
        let fold_seed = derive_seed(seed, 1000);

        let mut base_cfg = config.clone();
        base_cfg.source = DataSource::Synthetic(draw.clone());
        base_cfg.seed = seed;
        base_cfg.bootstrap.enabled = false;

        let mut none_cfg = base_cfg.clone();
        none_cfg.sampler.method = SamplerMethod::None;
        let mut smote_cfg = base_cfg.clone();
        smote_cfg.sampler.method = SamplerMethod::Smote;
        smote_cfg.filter.enabled = false;
        let mut af_cfg = base_cfg.clone();
        af_cfg.sampler.method = SamplerMethod::Smote;
        af_cfg.filter.enabled = true;

        let options = RunOptions::default();
        let none_run = run_fold(&data, split, &none_cfg, fold_seed, &options)?;
        let smote_run = run_fold(&data, split, &smote_cfg, fold_seed, &options)?;
        let af_run = run_fold(&data, split, &af_cfg, fold_seed, &options)?;

        let delta_f_tilde: Vec<(f64, f64)> = af_run
            .outcome
            .report
            .f_tilde_beta
            .iter()
            .zip(&none_run.outcome.report.f_tilde_beta)
            .map(|(&(b, af), &(_, none))| (b, af - none))
            .collect();
        let delta_brier = af_run.outcome.report.brier - none_run.outcome.report.brier;
        let (epsilon_hat, l_rho_hat) = match &af_run.outcome.diagnostics {
            Some(d) => (d.epsilon_hat, d.lipschitz_over_reach_hat),
            None => (0.0, None),
        };
        let bound_rhs = c1 * epsilon_hat + c2 * l_rho_hat.unwrap_or(0.0);
        let delong = delong_test(&af_run.test_probs, &none_run.test_probs, &af_run.test_labels)?;

        per_seed.push(SeedOutcome {
            seed_index,
            seed,
            f_check_pass: delta_f_tilde.first().map_or(true, |&(_, d)| d >= 0.0),
            brier_bound_pass: delta_brier <= bound_rhs + 1e-12,
            brier_abs_pass: delta_brier.abs() <= BRIER_ABS_TOLERANCE,
            recall_check_pass: af_run.outcome.report.recall >= smote_run.outcome.report.recall,
            delta_f_tilde,
            delta_brier,
            epsilon_hat,
            l_rho_hat,
            bound_rhs,
            recall_filtered: af_run.outcome.report.recall,
            recall_smote: smote_run.outcome.report.recall,
            recall_none: none_run.outcome.report.recall,
            delong_p_vs_none: delong.p_value,
        });
    }
    Ok(TheoremReport {
        config: config.clone(),
        c1,
        c2,
        per_seed,
    })
}
