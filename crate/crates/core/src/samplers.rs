//! Synthetic minority candidate generation: SMOTE, ADASYN,
//! Borderline-SMOTE, and SVM-SMOTE, each with full provenance.
//!
//! All neighborhoods use the Euclidean metric and assume standardized
//! features. Candidate counts follow the over-generation contract
//! `m = round(ratio * (n_neg - n_pos))`; degenerate inputs fall back to
//! plain SMOTE behaviour and are flagged, never silently dropped and never
//! fatal.
//!
//! Per-candidate draws come from one seeded stream in a documented order —
//! base index (where applicable), neighbor slot, gap — so a run can be
//! reproduced by replaying the stream.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_real, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::models::LinearMaxMarginModel;
use crate::rng::rng_from;
use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    None,
    Smote,
    Adasyn,
    Borderline,
    SvmSmote,
}

impl SamplerMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerMethod::None => "none",
            SamplerMethod::Smote => "smote",
            SamplerMethod::Adasyn => "adasyn",
            SamplerMethod::Borderline => "borderline",
            SamplerMethod::SvmSmote => "svm_smote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub k_neighbors: usize,
    /// Candidates generated = `round(overgen_ratio * (n_neg - n_pos))`.
    pub overgen_ratio: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            method: SamplerMethod::Smote,
            k_neighbors: 5,
            overgen_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::InvalidConfig("k_neighbors must be >= 1".into()));
        }
        if !(self.overgen_ratio > 0.0) {
            return Err(Error::InvalidConfig("overgen_ratio must be positive".into()));
        }
        Ok(())
    }
}

/// Degenerate-input fallbacks, recorded in provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerFallback {
    /// ADASYN found no minority point with majority neighbors; allocation
    /// fell back to uniform.
    AllSafe,
    /// Borderline-SMOTE found no DANGER points; interpolation fell back to
    /// all minority bases.
    EmptyDangerSet,
    /// SVM-SMOTE found no support vectors; interpolation fell back to all
    /// minority bases.
    NoSupportVectors,
}

/// Synthetic minority points with generation provenance.
///
/// `parent_a[i]` and `parent_b[i]` index rows of the minority subset the
/// sampler was run on (not the full dataset). Every point satisfies
/// `point = a + gap * (b - a)` componentwise with the stored gap; gaps lie
/// in [0,1] for interpolation and in [-0.5, 0] for SVM-SMOTE extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<F> {
    pub points: Matrix<F>,
    pub parent_a: Vec<usize>,
    pub parent_b: Vec<usize>,
    pub gap: Vec<F>,
    pub fallback: Option<SamplerFallback>,
}

impl<F: Float> CandidateSet<F> {
    pub fn empty(dim: usize) -> Self {
        CandidateSet {
            points: Matrix::zeros(0, dim),
            parent_a: Vec::new(),
            parent_b: Vec::new(),
            gap: Vec::new(),
            fallback: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the segment identity `point = a + gap * (b - a)` for every
    /// candidate against the minority matrix the set was generated from.
    pub fn segments_hold(&self, minority: &Matrix<F>, tol: F) -> bool {
        (0..self.len()).all(|i| {
            let a = minority.row(self.parent_a[i]);
            let b = minority.row(self.parent_b[i]);
            let g = self.gap[i];
            self.points
                .row(i)
                .iter()
                .enumerate()
                .all(|(j, &p)| (p - (a[j] + g * (b[j] - a[j]))).abs() <= tol)
        })
    }

    /// CSV with columns `f0..f{d-1}, parent_a, parent_b, gap`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (0..self.points.n_cols())
            .map(|j| format!("f{j}"))
            .chain(["parent_a".into(), "parent_b".into(), "gap".into()])
            .collect();
        writeln!(file, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut cells: Vec<String> = self.points.row(i).iter().map(|v| format_real(*v)).collect();
            cells.push(self.parent_a[i].to_string());
            cells.push(self.parent_b[i].to_string());
            cells.push(format_real(self.gap[i]));
            writeln!(file, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Indices of the `k` nearest rows to `query` by Euclidean distance, ties
/// broken toward the lower index. `exclude` removes one row (the query
/// itself, when it is a member of `points`).
pub fn knn_indices<F: Float>(
    points: &Matrix<F>,
    query: &[F],
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<usize>> {
    let available = points.n_rows() - usize::from(exclude.is_some());
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let mut dists: Vec<(F, usize)> = (0..points.n_rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (squared_distance(points.row(i), query), i))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(dists.into_iter().take(k).map(|(_, i)| i).collect())
}

/// k-NN lists within one matrix, excluding self-matches.
fn knn_lists<F: Float>(points: &Matrix<F>, k: usize) -> Result<Vec<Vec<usize>>> {
    (0..points.n_rows())
        .map(|i| knn_indices(points, points.row(i), k, Some(i)))
        .collect()
}

struct MinoritySplit<F> {
    minority: Matrix<F>,
    minority_rows: Vec<usize>,
    n_neg: usize,
}

fn split_minority<F: Float>(data: &Dataset<F>, k: usize) -> Result<MinoritySplit<F>> {
    let minority_rows = data.class_indices(1);
    if minority_rows.len() < k + 1 {
        return Err(Error::TooFewMinority {
            needed: k + 1,
            found: minority_rows.len(),
        });
    }
    Ok(MinoritySplit {
        minority: data.features().select_rows(&minority_rows),
        n_neg: data.n() - minority_rows.len(),
        minority_rows,
    })
}

fn target_count(n_pos: usize, n_neg: usize, ratio: f64) -> usize {
    if n_neg <= n_pos {
        return 0;
    }
    (ratio * (n_neg - n_pos) as f64).round() as usize
}

fn interpolate<F: Float>(a: &[F], b: &[F], gap: F) -> Vec<F> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x + gap * (y - x))
        .collect()
}

/// Plain SMOTE: each candidate interpolates between a uniformly drawn
/// minority base and one of its k nearest minority neighbors, with a
/// uniform gap. Draw order per candidate: base, neighbor slot, gap.
pub fn smote_generate<F: Float>(data: &Dataset<F>, config: &SamplerConfig) -> Result<CandidateSet<F>> {
    config.validate()?;
    let split = split_minority(data, config.k_neighbors)?;
    let m = target_count(split.minority_rows.len(), split.n_neg, config.overgen_ratio);
    let neighbors = knn_lists(&split.minority, config.k_neighbors)?;
    let mut rng = rng_from(config.seed);
    let mut out = CandidateSet::empty(data.dim());
    for _ in 0..m {
        let base = rng.gen_range(0..split.minority.n_rows());
        let slot = rng.gen_range(0..config.k_neighbors);
        let gap = F::cast(rng.gen::<f64>());
        push_candidate(&mut out, &split.minority, base, neighbors[base][slot], gap);
    }
    Ok(out)
}

fn push_candidate<F: Float>(
    out: &mut CandidateSet<F>,
    minority: &Matrix<F>,
    base: usize,
    neighbor: usize,
    gap: F,
) {
    let point = interpolate(minority.row(base), minority.row(neighbor), gap);
    out.points.push_row(&point);
    out.parent_a.push(base);
    out.parent_b.push(neighbor);
    out.gap.push(gap);
}

/// Majority fraction among each minority point's k nearest neighbors in the
/// full dataset (self excluded).
fn majority_fractions<F: Float>(
    data: &Dataset<F>,
    minority_rows: &[usize],
    k: usize,
) -> Result<Vec<f64>> {
    minority_rows
        .iter()
        .map(|&row| {
            let nn = knn_indices(data.features(), data.features().row(row), k, Some(row))?;
            let maj = nn.iter().filter(|&&i| data.labels()[i] == 0).count();
            Ok(maj as f64 / k as f64)
        })
        .collect()
}

/// Largest-remainder apportionment of `m` candidates to normalized quotas.
fn largest_remainder(weights: &[f64], m: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || m == 0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|&w| w / total * m as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|&q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(m - assigned) {
        counts[i] += 1;
    }
    counts
}

/// ADASYN: per-minority-point candidate counts proportional to the local
/// majority fraction, allocated by largest remainder; interpolation as in
/// SMOTE. Draw order per candidate: neighbor slot, gap (bases follow the
/// allocation in minority order).
pub fn adasyn_generate<F: Float>(data: &Dataset<F>, config: &SamplerConfig) -> Result<CandidateSet<F>> {
    config.validate()?;
    let split = split_minority(data, config.k_neighbors)?;
    let m = target_count(split.minority_rows.len(), split.n_neg, config.overgen_ratio);
    let fractions = majority_fractions(data, &split.minority_rows, config.k_neighbors)?;

    let all_safe = fractions.iter().all(|&r| r == 0.0);
    let weights: Vec<f64> = if all_safe {
        vec![1.0; fractions.len()]
    } else {
        fractions.clone()
    };
    let counts = largest_remainder(&weights, m);

    let neighbors = knn_lists(&split.minority, config.k_neighbors)?;
    let mut rng = rng_from(config.seed);
    let mut out = CandidateSet::empty(data.dim());
    for (base, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let slot = rng.gen_range(0..config.k_neighbors);
            let gap = F::cast(rng.gen::<f64>());
            push_candidate(&mut out, &split.minority, base, neighbors[base][slot], gap);
        }
    }
    out.fallback = all_safe.then_some(SamplerFallback::AllSafe);
    Ok(out)
}

/// Classification of minority points by their full-data neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderlineLabel {
    /// Majority fraction below 1/2: not used as a base.
    Safe,
    /// Majority fraction in [1/2, 1): eligible interpolation base.
    Danger,
    /// Every neighbor is majority: excluded.
    Noise,
}

/// Labels each minority point SAFE / DANGER / NOISE from its k nearest
/// full-data neighbors.
pub fn borderline_labels<F: Float>(
    data: &Dataset<F>,
    config: &SamplerConfig,
) -> Result<Vec<BorderlineLabel>> {
    let split = split_minority(data, config.k_neighbors)?;
    Ok(majority_fractions(data, &split.minority_rows, config.k_neighbors)?
        .iter()
        .map(|&r| {
            if r >= 1.0 {
                BorderlineLabel::Noise
            } else if r >= 0.5 {
                BorderlineLabel::Danger
            } else {
                BorderlineLabel::Safe
            }
        })
        .collect())
}

/// Borderline-SMOTE: interpolation bases restricted to DANGER minority
/// points; falls back to plain SMOTE bases when the DANGER set is empty.
/// Draw order per candidate: base, neighbor slot, gap.
pub fn borderline_generate<F: Float>(
    data: &Dataset<F>,
    config: &SamplerConfig,
) -> Result<CandidateSet<F>> {
    config.validate()?;
    let split = split_minority(data, config.k_neighbors)?;
    let m = target_count(split.minority_rows.len(), split.n_neg, config.overgen_ratio);
    let labels = borderline_labels(data, config)?;
    let danger: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == BorderlineLabel::Danger)
        .collect();
    let (bases, fallback) = if danger.is_empty() {
        (
            (0..split.minority.n_rows()).collect::<Vec<_>>(),
            Some(SamplerFallback::EmptyDangerSet),
        )
    } else {
        (danger, None)
    };

    let neighbors = knn_lists(&split.minority, config.k_neighbors)?;
    let mut rng = rng_from(config.seed);
    let mut out = CandidateSet::empty(data.dim());
    for _ in 0..m {
        let base = bases[rng.gen_range(0..bases.len())];
        let slot = rng.gen_range(0..config.k_neighbors);
        let gap = F::cast(rng.gen::<f64>());
        push_candidate(&mut out, &split.minority, base, neighbors[base][slot], gap);
    }
    out.fallback = fallback;
    Ok(out)
}

/// Fraction of the extrapolation segment reachable beyond the base point.
pub const SVM_EXTRAPOLATION_CAP: f64 = 0.5;

/// SVM-SMOTE: interpolation bases are minority support vectors of a linear
/// max-margin model trained on the same split. A base whose full-data
/// neighborhood is mostly minority interpolates toward a minority neighbor;
/// otherwise it extrapolates outward, capped at half a segment length
/// (stored as a negative gap so the segment identity still holds).
/// Draw order per candidate: base, neighbor slot, gap.
pub fn svm_smote_generate<F: Float>(
    data: &Dataset<F>,
    config: &SamplerConfig,
    svm: &LinearMaxMarginModel<F>,
) -> Result<CandidateSet<F>> {
    config.validate()?;
    let split = split_minority(data, config.k_neighbors)?;
    let m = target_count(split.minority_rows.len(), split.n_neg, config.overgen_ratio);

    let support_rows = svm.support_indices(data.features(), data.labels())?;
    let support_minority: Vec<usize> = split
        .minority_rows
        .iter()
        .enumerate()
        .filter(|(_, row)| support_rows.contains(row))
        .map(|(pos, _)| pos)
        .collect();
    let (bases, fallback) = if support_minority.is_empty() {
        (
            (0..split.minority.n_rows()).collect::<Vec<_>>(),
            Some(SamplerFallback::NoSupportVectors),
        )
    } else {
        (support_minority, None)
    };

    let fractions = majority_fractions(data, &split.minority_rows, config.k_neighbors)?;
    let neighbors = knn_lists(&split.minority, config.k_neighbors)?;
    let mut rng = rng_from(config.seed);
    let mut out = CandidateSet::empty(data.dim());
    for _ in 0..m {
        let base = bases[rng.gen_range(0..bases.len())];
        let slot = rng.gen_range(0..config.k_neighbors);
        let g = rng.gen::<f64>();
        let gap = if fractions[base] < 0.5 {
            F::cast(g)
        } else {
            F::cast(-SVM_EXTRAPOLATION_CAP * g)
        };
        push_candidate(&mut out, &split.minority, base, neighbors[base][slot], gap);
    }
    out.fallback = fallback;
    Ok(out)
}

/// Dispatches to the configured sampler; `SamplerMethod::None` yields an
/// empty candidate set and `SvmSmote` fits its margin model internally.
pub fn generate<F: Float>(
    data: &Dataset<F>,
    config: &SamplerConfig,
    svm: Option<&LinearMaxMarginModel<F>>,
) -> Result<CandidateSet<F>> {
    match config.method {
        SamplerMethod::None => Ok(CandidateSet::empty(data.dim())),
        SamplerMethod::Smote => smote_generate(data, config),
        SamplerMethod::Adasyn => adasyn_generate(data, config),
        SamplerMethod::Borderline => borderline_generate(data, config),
        SamplerMethod::SvmSmote => match svm {
            Some(svm) => svm_smote_generate(data, config, svm),
            None => Err(Error::InvalidConfig(
                "svm_smote needs a fitted margin model".into(),
            )),
        },
    }
}
