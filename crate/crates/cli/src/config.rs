//! Strict configuration loading: a sectioned TOML file plus dotted-key
//! overrides. Unknown keys are rejected with their exact path so sweep
//! typos fail loudly instead of silently running defaults.

use std::fmt;
use std::path::Path;

use afsmote_core::dataset::{LabelColumn, SyntheticSpec};
use afsmote_core::linalg::Matrix;
use afsmote_core::pipeline::{
    CalibrationPolicy, ClassifierKind, DataSource, ExperimentConfig, SweepGrid,
};
use afsmote_core::samplers::SamplerMethod;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

/// Everything a subcommand needs, resolved from defaults, file, overrides,
/// and the seed sources.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: ExperimentConfig,
    pub grid: SweepGrid,
    pub theorem_seeds: usize,
    pub c1: f64,
    pub c2: f64,
    /// Overrides that were applied, for provenance.
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourceKind {
    Synthetic,
    Csv,
}

struct Builder {
    source_kind: SourceKind,
    csv_path: Option<String>,
    label: LabelColumn,
    impute_mean: bool,
    synth: SyntheticSpec,
    experiment: ExperimentConfig,
    grid: SweepGrid,
    theorem_seeds: usize,
    c1: f64,
    c2: f64,
    file_seed: Option<u64>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            source_kind: SourceKind::Synthetic,
            csv_path: None,
            label: LabelColumn::Name("label".into()),
            impute_mean: false,
            synth: SyntheticSpec::default(),
            experiment: ExperimentConfig::default(),
            grid: SweepGrid::default(),
            theorem_seeds: 5,
            c1: 1.0,
            c2: 1.0,
            file_seed: None,
        }
    }

    fn finish(
        mut self,
        seed_flag: Option<u64>,
        overrides: Vec<String>,
    ) -> CResult<ResolvedConfig> {
        let env_seed = match std::env::var("AFSMOTE_SEED") {
            Ok(v) => match v.parse::<u64>() {
                Ok(s) => Some(s),
                Err(_) => return err(format!("AFSMOTE_SEED is not a valid u64: `{v}`")),
            },
            Err(_) => None,
        };
        let seed = seed_flag
            .or(self.file_seed)
            .or(env_seed)
            .unwrap_or(self.experiment.seed);
        self.experiment.seed = seed;
        self.synth.seed = seed;

        self.experiment.source = match self.source_kind {
            SourceKind::Synthetic => DataSource::Synthetic(self.synth),
            SourceKind::Csv => {
                let Some(path) = self.csv_path else {
                    return err("dataset.source = \"csv\" requires dataset.path");
                };
                DataSource::Csv {
                    path,
                    label: self.label,
                    impute_mean: self.impute_mean,
                }
            }
        };
        self.experiment
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(ResolvedConfig {
            experiment: self.experiment,
            grid: self.grid,
            theorem_seeds: self.theorem_seeds,
            c1: self.c1,
            c2: self.c2,
            overrides,
        })
    }
}

pub fn load(
    config_path: Option<&Path>,
    sets: &[String],
    seed_flag: Option<u64>,
) -> CResult<ResolvedConfig> {
    let mut builder = Builder::new();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for (section, value) in &table {
            let toml::Value::Table(keys) = value else {
                return err(format!("top-level key `{section}` must be a [section]"));
            };
            for (key, v) in keys {
                apply(&mut builder, section, key, v)?;
            }
        }
    }
    let mut applied = Vec::new();
    for set in sets {
        let Some((path, raw_value)) = set.split_once('=') else {
            return err(format!("--set expects KEY=VALUE, got `{set}`"));
        };
        let Some((section, key)) = path.split_once('.') else {
            return err(format!("--set key must be section.key, got `{path}`"));
        };
        let value = parse_fragment(raw_value);
        apply(&mut builder, section.trim(), key.trim(), &value)?;
        applied.push(set.clone());
    }
    builder.finish(seed_flag, applied)
}

/// Parses an override value as a TOML fragment, falling back to a bare
/// string (so `--set sampler.method=smote` works unquoted).
fn parse_fragment(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    }
}

fn apply(b: &mut Builder, section: &str, key: &str, v: &toml::Value) -> CResult<()> {
    let path = format!("{section}.{key}");
    match (section, key) {
        ("dataset", "source") => {
            b.source_kind = match as_str(v, &path)?.as_str() {
                "synthetic" => SourceKind::Synthetic,
                "csv" => SourceKind::Csv,
                other => return err(format!("{path}: unknown source `{other}`")),
            }
        }
        ("dataset", "path") => b.csv_path = Some(as_str(v, &path)?),
        ("dataset", "label_column") => {
            b.label = match v {
                toml::Value::Integer(i) if *i >= 0 => LabelColumn::Index(*i as usize),
                toml::Value::String(s) => LabelColumn::Name(s.clone()),
                _ => return err(format!("{path}: expected column name or 0-based index")),
            }
        }
        ("dataset", "impute_mean") => b.impute_mean = as_bool(v, &path)?,

        ("synth", "n") => b.synth.n = as_usize(v, &path)?,
        ("synth", "pi1") => b.synth.pi1 = as_f64(v, &path)?,
        ("synth", "dim") => b.synth.dim = as_usize(v, &path)?,
        ("synth", "mean_neg") => b.synth.mean_neg = as_f64_list(v, &path)?,
        ("synth", "mean_pos") => b.synth.mean_pos = as_f64_list(v, &path)?,
        ("synth", "cov_neg") => b.synth.cov_neg = as_matrix(v, &path)?,
        ("synth", "cov_pos") => b.synth.cov_pos = as_matrix(v, &path)?,

        ("sampler", "method") => {
            b.experiment.sampler.method = match as_str(v, &path)?.as_str() {
                "none" => SamplerMethod::None,
                "smote" => SamplerMethod::Smote,
                "adasyn" => SamplerMethod::Adasyn,
                "borderline" => SamplerMethod::Borderline,
                "svm_smote" => SamplerMethod::SvmSmote,
                other => return err(format!("{path}: unknown method `{other}`")),
            }
        }
        ("sampler", "k_neighbors") => b.experiment.sampler.k_neighbors = as_usize(v, &path)?,
        ("sampler", "overgen_ratio") => b.experiment.sampler.overgen_ratio = as_f64(v, &path)?,

        ("filter", "enabled") => b.experiment.filter.enabled = as_bool(v, &path)?,
        ("filter", "lambda") => b.experiment.filter.lambda = as_f64(v, &path)?,
        ("filter", "tau") => b.experiment.filter.tau = as_f64(v, &path)?,
        ("filter", "alpha") => b.experiment.filter.alpha = as_f64(v, &path)?,
        ("filter", "eta") => b.experiment.filter.eta = as_f64(v, &path)?,
        ("filter", "top_k") => {
            let k = as_usize(v, &path)?;
            b.experiment.filter.top_k = (k > 0).then_some(k);
        }
        ("filter", "diversity") => b.experiment.filter.diversity_enabled = as_bool(v, &path)?,
        ("filter", "extended_fusion") => {
            b.experiment.filter.extended_fusion = as_bool(v, &path)?
        }
        ("filter", "head_weights") => {
            let w = as_f64_list(v, &path)?;
            if w.len() != 4 {
                return err(format!("{path}: expected exactly 4 weights"));
            }
            b.experiment.filter.head_weights = [w[0], w[1], w[2], w[3]];
        }

        ("model", "classifier") => {
            b.experiment.classifier = match as_str(v, &path)?.as_str() {
                "logistic" => ClassifierKind::Logistic,
                "stump_boost" => ClassifierKind::StumpBoost,
                "linear_svm" => ClassifierKind::LinearSvm,
                other => return err(format!("{path}: unknown classifier `{other}`")),
            }
        }
        ("model", "calibration") => {
            b.experiment.calibration = match as_str(v, &path)?.as_str() {
                "auto" => CalibrationPolicy::Auto,
                "platt" => CalibrationPolicy::Platt,
                "isotonic" => CalibrationPolicy::Isotonic,
                "temperature" => CalibrationPolicy::Temperature,
                other => return err(format!("{path}: unknown calibration `{other}`")),
            }
        }

        ("evaluation", "betas") => b.experiment.betas = as_f64_list(v, &path)?,
        ("evaluation", "p0") => b.experiment.p0 = as_f64(v, &path)?,
        ("evaluation", "cv_folds") => b.experiment.cv_folds = as_usize(v, &path)?,
        ("evaluation", "bootstrap") => b.experiment.bootstrap.enabled = as_bool(v, &path)?,
        ("evaluation", "bootstrap_resamples") => {
            b.experiment.bootstrap.n_resamples = as_usize(v, &path)?
        }
        ("evaluation", "confidence") => b.experiment.bootstrap.confidence = as_f64(v, &path)?,
        ("evaluation", "ece_bins") => b.experiment.ece_bins = as_usize(v, &path)?,

        ("pca", "target_dim") => {
            let r = as_usize(v, &path)?;
            b.experiment.pca_target_dim = (r > 0).then_some(r);
        }

        ("run", "seed") => b.file_seed = Some(as_u64(v, &path)?),

        ("sweep", "lambda_values") => b.grid.lambda_values = as_f64_list(v, &path)?,
        ("sweep", "p0_values") => b.grid.p0_values = as_f64_list(v, &path)?,
        ("sweep", "k_values") => {
            b.grid.k_values = as_f64_list(v, &path)?
                .into_iter()
                .map(|x| x as usize)
                .collect()
        }
        ("sweep", "ratio_values") => b.grid.ratio_values = as_f64_list(v, &path)?,

        ("theorem", "seeds") => b.theorem_seeds = as_usize(v, &path)?,
        ("theorem", "c1") => b.c1 = as_f64(v, &path)?,
        ("theorem", "c2") => b.c2 = as_f64(v, &path)?,

        _ => return err(format!("unknown configuration key `{path}`")),
    }
    Ok(())
}

fn as_str(v: &toml::Value, path: &str) -> CResult<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        _ => err(format!("{path}: expected a string")),
    }
}

fn as_bool(v: &toml::Value, path: &str) -> CResult<bool> {
    match v {
        toml::Value::Boolean(x) => Ok(*x),
        _ => err(format!("{path}: expected a boolean")),
    }
}

fn as_f64(v: &toml::Value, path: &str) -> CResult<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(x) => Ok(*x as f64),
        _ => err(format!("{path}: expected a number")),
    }
}

fn as_usize(v: &toml::Value, path: &str) -> CResult<usize> {
    match v {
        toml::Value::Integer(x) if *x >= 0 => Ok(*x as usize),
        _ => err(format!("{path}: expected a nonnegative integer")),
    }
}

fn as_u64(v: &toml::Value, path: &str) -> CResult<u64> {
    match v {
        toml::Value::Integer(x) if *x >= 0 => Ok(*x as u64),
        toml::Value::String(s) => s
            .parse::<u64>()
            .map_err(|_| ConfigError(format!("{path}: expected an unsigned integer"))),
        _ => err(format!("{path}: expected an unsigned integer")),
    }
}

fn as_f64_list(v: &toml::Value, path: &str) -> CResult<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|x| as_f64(x, path)).collect(),
        _ => err(format!("{path}: expected an array of numbers")),
    }
}

fn as_matrix(v: &toml::Value, path: &str) -> CResult<Matrix<f64>> {
    match v {
        toml::Value::Array(rows) => {
            let rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| as_f64_list(r, path))
                .collect::<CResult<_>>()?;
            if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                return err(format!("{path}: expected a rectangular matrix"));
            }
            Ok(Matrix::from_rows(&rows))
        }
        _ => err(format!("{path}: expected an array of arrays")),
    }
}
