//! Dataset ingestion, standardization, and deterministic fold assignment.

mod fetch;

pub use fetch::{cache_dir, fetch_dataset, resolve_dataset, Registry, RegistryEntry, CACHE_ENV};

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk dataset formats understood by the loader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Comma-separated values, optional header row, label column last by
    /// default.
    Csv,
    /// `label idx:val idx:val ...` with 1-based indices.
    SparseIndexValue,
}

/// A binary classification dataset with labels in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n x d` feature matrix.
    pub features: DMatrix<f64>,
    /// Length-`n` labels, every entry `+1.0` or `-1.0`.
    pub labels: Vec<f64>,
    pub name: String,
    pub feature_names: Option<Vec<String>>,
    /// Raw labels mapped to `(-1, +1)`, when a relabeling took place.
    pub label_mapping: Option<(String, String)>,
}

impl Dataset {
    /// Builds a dataset, validating the type invariants.
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let n = features.nrows();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 instances, got {n}")));
        }
        if labels.len() != n {
            return Err(Error::DimMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Data("labels must be +1 or -1".into()));
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
            feature_names: None,
            label_mapping: None,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Indices of the positive and negative class, in instance order.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let pos = (0..self.n()).filter(|&i| self.labels[i] > 0.0).collect();
        let neg = (0..self.n()).filter(|&i| self.labels[i] < 0.0).collect();
        (pos, neg)
    }

    /// True when both classes are present.
    pub fn has_both_classes(&self) -> bool {
        let (p, n) = self.class_indices();
        !p.is_empty() && !n.is_empty()
    }

    /// Row-subset of the dataset, preserving instance order of `idx`.
    pub fn subset(&self, idx: &[usize], name: impl Into<String>) -> Dataset {
        let d = self.dim();
        let mut features = DMatrix::zeros(idx.len(), d);
        let mut labels = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            features.row_mut(r).copy_from(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            name: name.into(),
            feature_names: self.feature_names.clone(),
            label_mapping: self.label_mapping.clone(),
        }
    }
}

/// Per-feature affine transform fit on training data: `(x - mean) / std`.
///
/// Uses the population (1/n) standard deviation so that fold pipelines
/// reproduce deterministically. Constant features (std below `1e-12`) pass
/// through unscaled and are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

/// Fits a [`Standardizer`] on the training data.
pub fn fit_standardizer(train: &Dataset) -> Standardizer {
    let n = train.n() as f64;
    let d = train.dim();
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    let mut constant = vec![false; d];
    for j in 0..d {
        let col = train.features.column(j);
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        mean[j] = m;
        if s < 1e-12 {
            std[j] = 1.0;
            constant[j] = true;
        } else {
            std[j] = s;
        }
    }
    Standardizer {
        mean,
        std,
        constant,
    }
}

/// Applies a fitted [`Standardizer`] to a dataset.
pub fn apply_standardizer(s: &Standardizer, data: &Dataset) -> Result<Dataset> {
    if s.mean.len() != data.dim() {
        return Err(Error::DimMismatch {
            expected: s.mean.len(),
            got: data.dim(),
        });
    }
    let mut out = data.clone();
    for j in 0..data.dim() {
        for i in 0..data.n() {
            out.features[(i, j)] = (data.features[(i, j)] - s.mean[j]) / s.std[j];
        }
    }
    Ok(out)
}

impl Standardizer {
    /// Transforms a single instance.
    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.std[j])
            .collect())
    }
}

/// Stratified, seeded assignment of instances to `k` folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// `assignment[i]` is the fold of instance `i`, in `[0, k)`.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    /// Instance indices of fold `f`, in ascending order.
    pub fn fold_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == f)
            .collect()
    }

    /// Complement of fold `f`, in ascending order.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != f)
            .collect()
    }
}

/// Builds a stratified fold assignment. Deterministic in
/// `(n, labels, k, seed)`: fold sizes differ by at most one and per-fold
/// class counts differ from exact proportionality by at most one instance.
pub fn make_folds(data: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = data.n();
    if k < 2 {
        return Err(Error::Config(format!("fold count must be >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("fold count {k} exceeds n = {n}")));
    }
    let (pos, neg) = data.class_indices();
    for (label, class) in [("+1", &pos), ("-1", &neg)] {
        if class.len() * 2 < k {
            return Err(Error::Data(format!(
                "class {label} has {} members, too few to stratify into {k} folds",
                class.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    // Deal shuffled class members round-robin, continuing the fill position
    // across classes so total fold sizes stay balanced.
    let mut pos_ix = pos;
    let mut neg_ix = neg;
    pos_ix.shuffle(&mut rng);
    neg_ix.shuffle(&mut rng);
    let mut slot = 0usize;
    for class in [&pos_ix, &neg_ix] {
        for &i in class.iter() {
            assignment[i] = slot % k;
            slot += 1;
        }
    }
    Ok(FoldAssignment { k, assignment, seed })
}

/// Loads a dataset from a file.
///
/// CSV files may carry a header row (detected by a non-numeric cell in the
/// first line). The label column is the last one unless `label_col` is
/// given. `drop_cols` removes identifier columns before parsing features.
/// The two raw label values are mapped to `{-1, +1}` with the larger raw
/// label becoming `+1` (numeric order when both labels parse as numbers,
/// lexicographic otherwise); the mapping is recorded on the dataset.
pub fn load_dataset(
    path: &Path,
    format: DataFormat,
    label_col: Option<usize>,
    drop_cols: &[usize],
) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    match format {
        DataFormat::Csv => parse_csv(&text, &name, label_col, drop_cols),
        DataFormat::SparseIndexValue => parse_sparse(&text, &name),
    }
}

fn map_labels(raw: Vec<String>) -> Result<(Vec<f64>, Option<(String, String)>)> {
    let mut distinct: Vec<String> = raw.iter().cloned().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(Error::Data(format!(
            "more than two classes: {}",
            distinct.join(", ")
        )));
    }
    if distinct.len() < 2 {
        return Err(Error::Data("only one class present".into()));
    }
    // Larger raw label becomes +1; compare numerically when possible.
    let (a, b) = (&distinct[0], &distinct[1]);
    let (lo, hi) = match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x != y => {
            if x < y {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        }
        _ => (a.clone(), b.clone()),
    };
    let labels = raw
        .into_iter()
        .map(|s| if s == hi { 1.0 } else { -1.0 })
        .collect();
    let mapping = if lo == "-1" && hi == "1" || lo == "-1" && hi == "+1" {
        None
    } else {
        Some((lo, hi))
    };
    Ok((labels, mapping))
}

fn parse_csv(
    text: &str,
    name: &str,
    label_col: Option<usize>,
    drop_cols: &[usize],
) -> Result<Dataset> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if cells.is_empty() {
            continue;
        }
        if let Some(prev) = rows.first() {
            if cells.len() != prev.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("ragged row: {} cells, expected {}", cells.len(), prev.len()),
                });
            }
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(Error::Data("empty file".into()));
    }
    let ncols = rows[0].len();
    let label_ix = label_col.unwrap_or(ncols - 1);
    if label_ix >= ncols {
        return Err(Error::Config(format!(
            "label column {label_ix} out of range (row has {ncols} columns)"
        )));
    }
    let feature_cols: Vec<usize> = (0..ncols)
        .filter(|c| *c != label_ix && !drop_cols.contains(c))
        .collect();
    // Header detection: any feature cell in the first row that is not a number.
    let mut header: Option<Vec<String>> = None;
    if feature_cols
        .iter()
        .any(|&c| rows[0][c].parse::<f64>().is_err())
    {
        header = Some(feature_cols.iter().map(|&c| rows[0][c].clone()).collect());
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let n = rows.len();
    let d = feature_cols.len();
    let mut features = DMatrix::zeros(n, d);
    let mut raw_labels = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &c) in feature_cols.iter().enumerate() {
            features[(i, j)] = row[c].parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1 + header.is_some() as usize,
                msg: format!("non-numeric feature value '{}'", row[c]),
            })?;
        }
        raw_labels.push(row[label_ix].clone());
    }
    let (labels, mapping) = map_labels(raw_labels)?;
    let mut ds = Dataset::new(features, labels, name)?;
    ds.feature_names = header;
    ds.label_mapping = mapping;
    Ok(ds)
}

fn parse_sparse(text: &str, name: &str) -> Result<Dataset> {
    let mut entries: Vec<(Vec<(usize, f64)>, String)> = Vec::new();
    let mut d = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label = parts
            .next()
            .ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "missing label".into(),
            })?
            .to_string();
        let mut row = Vec::new();
        for tok in parts {
            let (ix, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected idx:val, got '{tok}'"),
            })?;
            let ix: usize = ix.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad index '{ix}'"),
            })?;
            if ix == 0 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "sparse indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad value '{val}'"),
            })?;
            d = d.max(ix);
            row.push((ix - 1, val));
        }
        entries.push((row, label));
    }
    if entries.is_empty() {
        return Err(Error::Data("empty file".into()));
    }
    let n = entries.len();
    let mut features = DMatrix::zeros(n, d);
    let mut raw_labels = Vec::with_capacity(n);
    for (i, (row, label)) in entries.into_iter().enumerate() {
        for (j, v) in row {
            features[(i, j)] = v;
        }
        raw_labels.push(label);
    }
    let (labels, mapping) = map_labels(raw_labels)?;
    let mut ds = Dataset::new(features, labels, name)?;
    ds.label_mapping = mapping;
    Ok(ds)
}
