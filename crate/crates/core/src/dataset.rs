//! Data ingestion, class statistics, stratified splitting, feature
//! standardization, and parametric synthetic-distribution generation.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::rng::rng_from;
use crate::Float;

/// How a label column is addressed in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

/// What to do with missing values (`NaN`, empty cells) at load time.
///
/// `Reject` fails on the first missing value. `ImputeMean` admits them and
/// defers filling to [`Standardizer::fit`], which uses training-split column
/// means only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NanPolicy {
    Reject,
    ImputeMean,
}

/// Feature matrix with binary labels; the common currency of the pipeline.
///
/// Label 1 marks the minority/positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    features: Matrix<F>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl<F: Float> Dataset<F> {
    /// Validating constructor: finite features, labels in {0,1}, n >= 2.
    pub fn new(features: Matrix<F>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if !features.all_finite() {
            return Err(Error::InvalidConfig(
                "dataset contains non-finite features".into(),
            ));
        }
        Self::new_allowing_nan(features, labels, feature_names)
    }

    /// Constructor used by the `ImputeMean` load path; NaN cells are allowed
    /// and must be filled by [`Standardizer`] before any numeric operation.
    pub fn new_allowing_nan(
        features: Matrix<F>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} feature rows but {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        if features.n_rows() < 2 {
            return Err(Error::InvalidConfig("dataset needs at least 2 rows".into()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
        }
        if feature_names.len() != features.n_cols() {
            return Err(Error::InvalidConfig("feature name count mismatch".into()));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &Matrix<F> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Indices of rows carrying the given label, in row order.
    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset<F> {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Writes the dataset as CSV with the label in a final column.
    ///
    /// Reals are serialized with 17 significant digits so reloading
    /// reproduces `f64` features bit-exactly.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P, label_name: &str) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_name);
        writeln!(file, "{}", header.join(","))?;
        for (row, &y) in self.features.iter_rows().zip(&self.labels) {
            let mut cells: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
            cells.push(y.to_string());
            writeln!(file, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// 17-significant-digit decimal serialization; round-trips `f64` bit-exactly.
pub fn format_real<F: Float>(v: F) -> String {
    format!("{:.16e}", v.to64())
}

/// Loads a CSV file with one header row; all non-label numeric columns become
/// features in file order, rows keep file order.
pub fn load_csv<F: Float, P: AsRef<Path>>(
    path: P,
    label: &LabelColumn,
    nan_policy: NanPolicy,
) -> Result<Dataset<F>> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(Error::EmptyFile(path_str));
    }
    let label_idx = match label {
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?,
        LabelColumn::Index(i) => {
            if *i >= headers.len() {
                return Err(Error::MissingColumn(i.to_string()));
            }
            *i
        }
    };

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<F>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                labels.push(parse_label(cell, row_idx)?);
                continue;
            }
            row.push(parse_cell::<F>(cell, row_idx, col, nan_policy)?);
        }
        if row.len() != feature_names.len() {
            return Err(Error::NonNumericCell {
                row: row_idx,
                col: record.len(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path_str));
    }
    let features = Matrix::from_rows(&rows);
    match nan_policy {
        NanPolicy::Reject => Dataset::new(features, labels, feature_names),
        NanPolicy::ImputeMean => Dataset::new_allowing_nan(features, labels, feature_names),
    }
}

fn parse_label(cell: &str, row: usize) -> Result<u8> {
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::InvalidLabel {
            row,
            value: cell.to_string(),
        }),
    }
}

fn parse_cell<F: Float>(cell: &str, row: usize, col: usize, policy: NanPolicy) -> Result<F> {
    let missing = cell.is_empty() || cell.eq_ignore_ascii_case("nan");
    if missing {
        return match policy {
            NanPolicy::Reject => Err(Error::NaNPolicyViolation { row, col }),
            NanPolicy::ImputeMean => Ok(F::nan()),
        };
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(F::cast(v)),
        Ok(v) if v.is_nan() => match policy {
            NanPolicy::Reject => Err(Error::NaNPolicyViolation { row, col }),
            NanPolicy::ImputeMean => Ok(F::nan()),
        },
        _ => Err(Error::NonNumericCell { row, col }),
    }
}

/// Exact class counts and the minority prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n_total: usize,
    pub n_pos: usize,
    pub pi1: f64,
}

pub fn class_stats<F: Float>(data: &Dataset<F>) -> ClassStats {
    let n_pos = data.n_pos();
    ClassStats {
        n_total: data.n(),
        n_pos,
        pi1: n_pos as f64 / data.n() as f64,
    }
}

/// Disjoint train / validation / test index lists for one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train_indices: Vec<usize>,
    pub valid_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl FoldSplit {
    /// Checks the partition property: the three lists are disjoint and cover
    /// `0..n` exactly once.
    pub fn covers_exactly(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &i in self
            .train_indices
            .iter()
            .chain(&self.valid_indices)
            .chain(&self.test_indices)
        {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

/// Stratified k-fold split with a 25% stratified validation carve-out from
/// each fold's training portion.
///
/// Per class, shuffled indices are dealt round-robin into the k test folds,
/// so each test fold's positive count is within one of `n_pos / k`. The
/// validation carve takes `round(0.25 * remaining)` per class, clamped so
/// both train and validation keep at least one sample of each class.
pub fn stratified_kfold<F: Float>(
    data: &Dataset<F>,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::InvalidConfig("k-fold needs k >= 2".into()));
    }
    let pos: Vec<usize> = data.class_indices(1);
    let neg: Vec<usize> = data.class_indices(0);
    let min_class = pos.len().min(neg.len());
    if min_class < k {
        return Err(Error::TooFewPositives {
            needed: k,
            found: min_class,
        });
    }

    let mut rng = rng_from(seed);
    let mut pos_shuffled = pos;
    let mut neg_shuffled = neg;
    pos_shuffled.shuffle(&mut rng);
    neg_shuffled.shuffle(&mut rng);

    let deal = |items: &[usize]| -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); k];
        for (i, &idx) in items.iter().enumerate() {
            folds[i % k].push(idx);
        }
        folds
    };
    let pos_folds = deal(&pos_shuffled);
    let neg_folds = deal(&neg_shuffled);

    let mut splits = Vec::with_capacity(k);
    for f in 0..k {
        let mut test: Vec<usize> = pos_folds[f].iter().chain(&neg_folds[f]).copied().collect();

        let rem_pos: Vec<usize> = (0..k)
            .filter(|&g| g != f)
            .flat_map(|g| pos_folds[g].iter().copied())
            .collect();
        let rem_neg: Vec<usize> = (0..k)
            .filter(|&g| g != f)
            .flat_map(|g| neg_folds[g].iter().copied())
            .collect();
        if rem_pos.len() < 2 || rem_neg.len() < 2 {
            return Err(Error::TooFewPositives {
                needed: k + 1,
                found: min_class,
            });
        }
        let carve = |items: &[usize]| -> (Vec<usize>, Vec<usize>) {
            let take = ((items.len() as f64 * 0.25).round() as usize).clamp(1, items.len() - 1);
            (items[..take].to_vec(), items[take..].to_vec())
        };
        let (valid_pos, train_pos) = carve(&rem_pos);
        let (valid_neg, train_neg) = carve(&rem_neg);

        let mut valid: Vec<usize> = valid_pos.into_iter().chain(valid_neg).collect();
        let mut train: Vec<usize> = train_pos.into_iter().chain(train_neg).collect();
        test.sort_unstable();
        valid.sort_unstable();
        train.sort_unstable();
        splits.push(FoldSplit {
            train_indices: train,
            valid_indices: valid,
            test_indices: test,
        });
    }
    Ok(splits)
}

/// Parameters of a two-Gaussian imbalanced generator used by the theorem
/// harness and synthetic experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub pi1: f64,
    pub dim: usize,
    /// Mean of the majority (label 0) class.
    pub mean_neg: Vec<f64>,
    /// Mean of the minority (label 1) class.
    pub mean_pos: Vec<f64>,
    pub cov_neg: Matrix<f64>,
    pub cov_pos: Matrix<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 2-D Gaussians with a 2.5-sigma mean separation and a sheared,
    /// inflated minority covariance; pi1 = 0.05, n = 10,000.
    fn default() -> Self {
        SyntheticSpec {
            n: 10_000,
            pi1: 0.05,
            dim: 2,
            mean_neg: vec![0.0, 0.0],
            mean_pos: vec![2.5, 0.0],
            cov_neg: Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            cov_pos: Matrix::from_rows(&[vec![2.0, 1.2], vec![1.2, 2.0]]),
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pi1 > 0.0 && self.pi1 < 0.5) {
            return Err(Error::InvalidConfig("pi1 must lie in (0, 0.5)".into()));
        }
        if self.mean_neg.len() != self.dim || self.mean_pos.len() != self.dim {
            return Err(Error::InvalidConfig("mean dimension mismatch".into()));
        }
        for cov in [&self.cov_neg, &self.cov_pos] {
            if cov.n_rows() != self.dim || cov.n_cols() != self.dim {
                return Err(Error::InvalidConfig("covariance dimension mismatch".into()));
            }
            for i in 0..self.dim {
                for j in 0..i {
                    if (cov.get(i, j) - cov.get(j, i)).abs() > 1e-12 {
                        return Err(Error::NonPositiveDefiniteCovariance);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Draws a dataset with exactly `round(n * pi1)` minority rows.
///
/// Rows are laid out as the majority block followed by the minority block;
/// the stratified splitter shuffles anyway. Deterministic by `spec.seed`.
pub fn make_gaussian_imbalanced<F: Float>(spec: &SyntheticSpec) -> Result<Dataset<F>> {
    spec.validate()?;
    let chol_neg = cholesky(&spec.cov_neg)?;
    let chol_pos = cholesky(&spec.cov_pos)?;
    let n_pos = (spec.n as f64 * spec.pi1).round() as usize;
    let n_neg = spec.n - n_pos;

    let mut rng = rng_from(spec.seed);
    let mut draw = |mean: &[f64], chol: &Matrix<f64>, count: usize, features: &mut Matrix<F>| {
        let dim = spec.dim;
        let mut z = vec![0.0f64; dim];
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let mut x = vec![F::zero(); dim];
            for (i, xi) in x.iter_mut().enumerate() {
                let mut v = mean[i];
                for (j, &zj) in z.iter().enumerate().take(i + 1) {
                    v += chol.get(i, j) * zj;
                }
                *xi = F::cast(v);
            }
            features.push_row(&x);
        }
    };

    let mut features = Matrix::zeros(0, spec.dim);
    draw(&spec.mean_neg, &chol_neg, n_neg, &mut features);
    draw(&spec.mean_pos, &chol_pos, n_pos, &mut features);
    let mut labels = vec![0u8; n_neg];
    labels.extend(std::iter::repeat(1u8).take(n_pos));
    let names = (0..spec.dim).map(|j| format!("f{j}")).collect();
    Dataset::new(features, labels, names)
}

/// Column-wise z-scoring (and optional mean imputation) fitted on a training
/// subset and applied to any rows.
///
/// All distance-based operations downstream assume features passed through
/// a standardizer fitted on the training split only.
#[derive(Debug, Clone)]
pub struct Standardizer<F> {
    pub means: Vec<F>,
    pub stds: Vec<F>,
    impute_means: Option<Vec<F>>,
}

impl<F: Float> Standardizer<F> {
    pub fn fit(features: &Matrix<F>, rows: &[usize], impute_nan: bool) -> Self {
        let d = features.n_cols();
        let mut means = vec![F::zero(); d];
        let mut stds = vec![F::zero(); d];
        let mut impute = vec![F::zero(); d];
        for j in 0..d {
            let mut sum = F::zero();
            let mut count = 0usize;
            for &i in rows {
                let v = features.get(i, j);
                if v.is_finite() {
                    sum = sum + v;
                    count += 1;
                }
            }
            let mean = if count > 0 {
                sum / F::cast(count as f64)
            } else {
                F::zero()
            };
            impute[j] = mean;
            let mut ss = F::zero();
            for &i in rows {
                let v = features.get(i, j);
                let v = if v.is_finite() { v } else { mean };
                let dlt = v - mean;
                ss = ss + dlt * dlt;
            }
            let var = if rows.len() > 1 {
                ss / F::cast((rows.len() - 1) as f64)
            } else {
                F::zero()
            };
            let std = var.sqrt();
            means[j] = mean;
            stds[j] = if std > F::zero() { std } else { F::one() };
        }
        Standardizer {
            means,
            stds,
            impute_means: impute_nan.then_some(impute),
        }
    }

    pub fn transform(&self, features: &Matrix<F>, rows: &[usize]) -> Matrix<F> {
        let d = features.n_cols();
        let mut out = Matrix::zeros(0, d);
        let mut buf = vec![F::zero(); d];
        for &i in rows {
            for (j, b) in buf.iter_mut().enumerate() {
                let mut v = features.get(i, j);
                if !v.is_finite() {
                    v = match &self.impute_means {
                        Some(m) => m[j],
                        None => self.means[j],
                    };
                }
                *b = (v - self.means[j]) / self.stds[j];
            }
            out.push_row(&buf);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_csv_parses_three_rows() {
        let f = write_tmp("a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
        let ds: Dataset<f64> =
            load_csv(f.path(), &LabelColumn::Name("y".into()), NanPolicy::Reject).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.features().row(1), &[3.0, 4.0]);
        assert_eq!(ds.feature_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn load_csv_missing_column() {
        let f = write_tmp("a,b,y\n1,2,0\n3,4,1\n");
        let err = load_csv::<f64, _>(f.path(), &LabelColumn::Name("z".into()), NanPolicy::Reject)
            .unwrap_err();
        assert!(matches!(err, Error::MissingColumn(name) if name == "z"));
    }

    #[test]
    fn load_csv_rejects_nan_and_garbage() {
        let f = write_tmp("a,y\nnan,0\n2,1\n");
        let err =
            load_csv::<f64, _>(f.path(), &LabelColumn::Name("y".into()), NanPolicy::Reject)
                .unwrap_err();
        assert!(matches!(
            err,
            Error::NaNPolicyViolation { row: 0, col: 0 }
        ));

        let f = write_tmp("a,y\nxyz,0\n2,1\n");
        let err =
            load_csv::<f64, _>(f.path(), &LabelColumn::Name("y".into()), NanPolicy::Reject)
                .unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { row: 0, col: 0 }));
    }

    #[test]
    fn load_csv_empty_file() {
        let f = write_tmp("a,y\n");
        let err =
            load_csv::<f64, _>(f.path(), &LabelColumn::Name("y".into()), NanPolicy::Reject)
                .unwrap_err();
        assert!(matches!(err, Error::EmptyFile(_)));
    }

    #[test]
    fn impute_policy_admits_nan_then_standardizer_fills() {
        let f = write_tmp("a,b,y\n1,,0\n3,4,1\n5,6,0\n");
        let ds: Dataset<f64> = load_csv(
            f.path(),
            &LabelColumn::Name("y".into()),
            NanPolicy::ImputeMean,
        )
        .unwrap();
        assert!(ds.features().get(0, 1).is_nan());
        let std = Standardizer::fit(ds.features(), &[0, 1, 2], true);
        let t = std.transform(ds.features(), &[0, 1, 2]);
        assert!(t.all_finite());
    }

    #[test]
    fn class_stats_exact_counts() {
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![0.0f64], vec![1.0], vec![2.0]]),
            vec![0, 1, 0],
            vec!["f0".into()],
        )
        .unwrap();
        let s = class_stats(&ds);
        assert_eq!(s.n_total, 3);
        assert_eq!(s.n_pos, 1);
        assert_eq!(s.pi1, 1.0 / 3.0);
    }

    #[test]
    fn class_stats_degenerate_all_negative() {
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![0.0f64], vec![1.0]]),
            vec![0, 0],
            vec!["f0".into()],
        )
        .unwrap();
        assert_eq!(class_stats(&ds).pi1, 0.0);
    }

    fn toy_dataset(n_pos: usize, n_neg: usize) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n_pos + n_neg).map(|i| vec![i as f64]).collect();
        let mut labels = vec![1u8; n_pos];
        labels.extend(vec![0u8; n_neg]);
        Dataset::new(Matrix::from_rows(&rows), labels, vec!["f0".into()]).unwrap()
    }

    #[test]
    fn kfold_exact_divisibility() {
        let ds = toy_dataset(5, 5);
        let folds = stratified_kfold(&ds, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        for fold in &folds {
            let pos = fold
                .test_indices
                .iter()
                .filter(|&&i| ds.labels()[i] == 1)
                .count();
            assert_eq!(pos, 1);
            assert!(fold.covers_exactly(ds.n()));
        }
    }

    #[test]
    fn kfold_deterministic() {
        let ds = toy_dataset(10, 40);
        let a = stratified_kfold(&ds, 5, 99).unwrap();
        let b = stratified_kfold(&ds, 5, 99).unwrap();
        assert_eq!(a, b);
        let c = stratified_kfold(&ds, 5, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn kfold_seven_positives_across_five_folds() {
        let ds = toy_dataset(7, 93);
        let folds = stratified_kfold(&ds, 5, 3).unwrap();
        let counts: Vec<usize> = folds
            .iter()
            .map(|f| {
                f.test_indices
                    .iter()
                    .filter(|&&i| ds.labels()[i] == 1)
                    .count()
            })
            .collect();
        assert_eq!(counts.iter().sum::<usize>(), 7);
        assert!(counts.iter().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn kfold_partitions_keep_both_classes() {
        let ds = toy_dataset(12, 60);
        for fold in stratified_kfold(&ds, 4, 11).unwrap() {
            for part in [&fold.train_indices, &fold.valid_indices, &fold.test_indices] {
                assert!(part.iter().any(|&i| ds.labels()[i] == 1));
                assert!(part.iter().any(|&i| ds.labels()[i] == 0));
            }
        }
    }

    #[test]
    fn kfold_too_few_positives() {
        let ds = toy_dataset(3, 50);
        assert!(matches!(
            stratified_kfold(&ds, 5, 0),
            Err(Error::TooFewPositives { .. })
        ));
    }

    fn identity_spec(n: usize, pi1: f64, sep: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n,
            pi1,
            dim: 2,
            mean_neg: vec![0.0, 0.0],
            mean_pos: vec![sep, 0.0],
            cov_neg: Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            cov_pos: Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            seed,
        }
    }

    #[test]
    fn gaussian_exact_counts() {
        let ds: Dataset<f64> = make_gaussian_imbalanced(&identity_spec(1000, 0.05, 3.0, 1)).unwrap();
        assert_eq!(ds.n_pos(), 50);
        assert_eq!(ds.n() - ds.n_pos(), 950);
    }

    #[test]
    fn gaussian_seed_determinism() {
        let a: Dataset<f64> = make_gaussian_imbalanced(&identity_spec(500, 0.1, 3.0, 9)).unwrap();
        let b: Dataset<f64> = make_gaussian_imbalanced(&identity_spec(500, 0.1, 3.0, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_synthetic_spec_prior_is_exact() {
        let spec = identity_spec(10_000, 0.02, 3.0, 5);
        let ds: Dataset<f64> = make_gaussian_imbalanced(&spec).unwrap();
        assert_eq!(ds.n_pos(), 200);
    }

    #[test]
    fn gaussian_rejects_indefinite_covariance() {
        let mut spec = identity_spec(100, 0.2, 1.0, 0);
        spec.cov_pos = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            make_gaussian_imbalanced::<f64>(&spec),
            Err(Error::NonPositiveDefiniteCovariance)
        ));
    }

    #[test]
    fn gaussian_class_means_converge() {
        let spec = identity_spec(8000, 0.25, 3.0, 17);
        let ds: Dataset<f64> = make_gaussian_imbalanced(&spec).unwrap();
        for (label, mean) in [(0u8, &spec.mean_neg), (1u8, &spec.mean_pos)] {
            let idx = ds.class_indices(label);
            let m = ds.features().select_rows(&idx);
            let mut err = 0.0f64;
            for j in 0..2 {
                let avg = m.column(j).iter().sum::<f64>() / m.n_rows() as f64;
                err += (avg - mean[j]).powi(2);
            }
            // sample mean error bound: 4 * sigma_max / sqrt(n_class)
            assert!(err.sqrt() <= 4.0 / (m.n_rows() as f64).sqrt());
        }
    }

    /// With means (0,0)/(3,0) and identity covariances the accuracy-optimal
    /// boundary is the hyperplane x1 = 1.5 + ln((1-pi1)/pi1)/3; an empirical
    /// threshold scan on a large sample must land near it.
    #[test]
    fn gaussian_bayes_boundary_matches_closed_form() {
        let pi1 = 0.05;
        let spec = identity_spec(60_000, pi1, 3.0, 123);
        let ds: Dataset<f64> = make_gaussian_imbalanced(&spec).unwrap();
        let expected = 1.5 + ((1.0 - pi1) / pi1).ln() / 3.0;

        let mut best_t = f64::NAN;
        let mut best_acc = -1.0;
        let mut t = expected - 1.5;
        while t <= expected + 1.5 {
            let correct = ds
                .features()
                .iter_rows()
                .zip(ds.labels())
                .filter(|(row, &y)| (row[0] >= t) == (y == 1))
                .count();
            let acc = correct as f64 / ds.n() as f64;
            if acc > best_acc {
                best_acc = acc;
                best_t = t;
            }
            t += 0.01;
        }
        assert!(
            (best_t - expected).abs() < 0.25,
            "empirical {best_t} vs closed form {expected}"
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let spec = identity_spec(200, 0.2, 3.0, 31);
        let ds: Dataset<f64> = make_gaussian_imbalanced(&spec).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        ds.save_csv(f.path(), "label").unwrap();
        let back: Dataset<f64> =
            load_csv(f.path(), &LabelColumn::Name("label".into()), NanPolicy::Reject).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn stratification_rate_bound_holds() {
        let ds = toy_dataset(17, 211);
        let pi1 = 17.0 / 228.0;
        for fold in stratified_kfold(&ds, 6, 5).unwrap() {
            let m = fold.test_indices.len() as f64;
            let pos = fold
                .test_indices
                .iter()
                .filter(|&&i| ds.labels()[i] == 1)
                .count() as f64;
            assert!((pos / m - pi1).abs() <= 1.0 / m + 1e-12);
        }
    }
}
