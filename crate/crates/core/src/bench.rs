//! Cross-validation experiment harness: nested model selection, McNemar
//! significance scoring, and tabular report emission.

use crate::data::{apply_standardizer, fit_standardizer, make_folds, Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelBank, KernelSpec};
use crate::mkl::{solve_mkl, train_mkl, MklParams};
use crate::models::{train_fda, train_svm_family, train_svm_fda, ModelKind, TrainedModel};
use crate::qp::{solve_dual, SvmMParams};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Chi-squared critical value at 0.05, one degree of freedom.
pub const MCNEMAR_CRITICAL: f64 = 3.841;

/// Full specification of a cross-validation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub algorithms: Vec<ModelKind>,
    /// Single-kernel cells; ignored by the MKL algorithms.
    pub kernels: Vec<KernelSpec>,
    /// Basis-kernel bank for the MKL algorithms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<Vec<KernelSpec>>,
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub c_grid: Vec<f64>,
    /// `C2 = c2_factor * C1` for the band-constrained variants.
    pub c2_factor: f64,
    pub epsilon: f64,
    pub lambda_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config("datasets and algorithms must be non-empty".into()));
        }
        if self.outer_k < 2 || self.inner_k < 2 {
            return Err(Error::Config("outer_k and inner_k must be >= 2".into()));
        }
        if self.c_grid.is_empty() {
            return Err(Error::Config("c_grid must be non-empty".into()));
        }
        let single = self
            .algorithms
            .iter()
            .any(|a| !matches!(a, ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma));
        if single && self.kernels.is_empty() {
            return Err(Error::Config("kernels must be non-empty for single-kernel algorithms".into()));
        }
        let mkl = self
            .algorithms
            .iter()
            .any(|a| matches!(a, ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma));
        if mkl && self.bank.as_ref().is_none_or(|b| b.is_empty()) {
            return Err(Error::Config("bank must be non-empty for MKL algorithms".into()));
        }
        if self.lambda_grid.is_empty() && self.algorithms.contains(&ModelKind::SvmFda) {
            return Err(Error::Config("lambda_grid must be non-empty for svm-fda".into()));
        }
        Ok(())
    }

    /// Single-kernel comparison preset: five algorithms over four kernels.
    pub fn table1(datasets: Vec<String>, seed: u64) -> Self {
        Self {
            datasets,
            algorithms: vec![
                ModelKind::Svm,
                ModelKind::SvmM,
                ModelKind::EpsSvm,
                ModelKind::SvmFda,
                ModelKind::Fda,
            ],
            kernels: vec![
                KernelSpec::linear(),
                KernelSpec::polynomial(2),
                KernelSpec::polynomial(3),
                KernelSpec::gaussian(1.0),
            ],
            bank: None,
            outer_k: 10,
            inner_k: 10,
            seed,
            c_grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            c2_factor: 1.0 / 3.0,
            epsilon: 3.0,
            lambda_grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
        }
    }

    /// Multi-kernel comparison preset: the 20-kernel bank.
    pub fn table2(datasets: Vec<String>, seed: u64) -> Self {
        Self {
            datasets,
            algorithms: vec![ModelKind::MklM, ModelKind::EpsMkl, ModelKind::MklGamma],
            kernels: Vec::new(),
            bank: Some(KernelBank::default20_specs(true)),
            outer_k: 10,
            inner_k: 10,
            seed,
            c_grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            c2_factor: 1.0 / 3.0,
            epsilon: 3.0,
            lambda_grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
        }
    }
}

/// Stable kebab-case label of an algorithm, as used in reports and on the
/// command line.
pub fn algo_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Svm => "svm",
        ModelKind::SvmM => "svm-m",
        ModelKind::EpsSvm => "eps-svm",
        ModelKind::SvmFda => "svm-fda",
        ModelKind::Fda => "fda",
        ModelKind::MklM => "mkl-m",
        ModelKind::EpsMkl => "eps-mkl",
        ModelKind::MklGamma => "mkl-gamma",
    }
}

/// Outcome of one (dataset, kernel, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub kernel: String,
    pub algorithm: ModelKind,
    /// Pooled 10-fold classification error, percent.
    pub error_percent: Option<f64>,
    /// Per-instance correctness indexed by original dataset position; every
    /// instance is tested exactly once across the outer folds.
    pub correct: Option<Vec<bool>>,
    /// Hyperparameters chosen by the inner CV, one per outer fold:
    /// `(c1, lambda)` with `lambda = 0` where not applicable.
    pub chosen: Vec<(f64, f64)>,
    /// Failure message; a failed cell is kept, not dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
}

/// McNemar's test with continuity correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Disagreements where A was wrong and B right.
    pub b: usize,
    /// Disagreements where A was right and B wrong.
    pub c: usize,
    pub statistic: f64,
    pub significant: bool,
}

/// Continuity-corrected McNemar statistic `(|b - c| - 1)^2 / (b + c)` over
/// two correctness vectors; no disagreements give statistic 0.
pub fn mcnemar(correct_a: &[bool], correct_b: &[bool]) -> Result<McNemarResult> {
    if correct_a.len() != correct_b.len() {
        return Err(Error::DimMismatch {
            expected: correct_a.len(),
            got: correct_b.len(),
        });
    }
    let mut b = 0usize;
    let mut c = 0usize;
    for (&a, &bb) in correct_a.iter().zip(correct_b) {
        match (a, bb) {
            (false, true) => b += 1,
            (true, false) => c += 1,
            _ => {}
        }
    }
    let statistic = if b + c == 0 {
        0.0
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        diff * diff / (b + c) as f64
    };
    Ok(McNemarResult {
        b,
        c,
        statistic,
        significant: statistic > MCNEMAR_CRITICAL,
    })
}

/// Pairwise tournament points per algorithm and kernel group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub kernels: Vec<String>,
    pub algorithms: Vec<ModelKind>,
    /// `points[a][k]` are algorithm `a`'s points in kernel group `k`.
    pub points: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

/// Scores every ordered algorithm pair per (dataset, kernel) cell: one
/// point to the significantly better algorithm, half a point each
/// otherwise. Failed cells are excluded from the tournament.
pub fn score_table(report: &ExperimentReport) -> Result<ScoreTable> {
    let mut kernels: Vec<String> = Vec::new();
    for cell in &report.cells {
        if !kernels.contains(&cell.kernel) {
            kernels.push(cell.kernel.clone());
        }
    }
    let algorithms = report.config.algorithms.clone();
    let mut points = vec![vec![0.0; kernels.len()]; algorithms.len()];
    let find = |dataset: &str, kernel: &str, algo: ModelKind| {
        report
            .cells
            .iter()
            .find(|c| c.dataset == dataset && c.kernel == kernel && c.algorithm == algo)
    };
    for (ki, kernel) in kernels.iter().enumerate() {
        for dataset in &report.config.datasets {
            for (ai, &a) in algorithms.iter().enumerate() {
                for (bi, &b) in algorithms.iter().enumerate() {
                    if bi <= ai {
                        continue;
                    }
                    let (Some(ca), Some(cb)) = (find(dataset, kernel, a), find(dataset, kernel, b))
                    else {
                        continue;
                    };
                    if ca.failed.is_some() || cb.failed.is_some() {
                        continue;
                    }
                    let (va, vb) = match (&ca.correct, &cb.correct) {
                        (Some(va), Some(vb)) => (va, vb),
                        _ => {
                            return Err(Error::Data(format!(
                                "cell {dataset}/{kernel} is missing correctness vectors"
                            )))
                        }
                    };
                    let m = mcnemar(va, vb)?;
                    if !m.significant {
                        points[ai][ki] += 0.5;
                        points[bi][ki] += 0.5;
                    } else if m.b > m.c {
                        // A wrong more often: B wins.
                        points[bi][ki] += 1.0;
                    } else {
                        points[ai][ki] += 1.0;
                    }
                }
            }
        }
    }
    let totals = points.iter().map(|row| row.iter().sum()).collect();
    Ok(ScoreTable {
        kernels,
        algorithms,
        points,
        totals,
    })
}

fn params_for(kind: ModelKind, c1: f64, c2_factor: f64, epsilon: f64) -> SvmMParams {
    let mut p = match kind {
        ModelKind::Svm | ModelKind::SvmFda | ModelKind::MklGamma => SvmMParams::standard_svm(c1),
        ModelKind::EpsSvm | ModelKind::EpsMkl => SvmMParams::new(c1, c1 * c2_factor, 0.0),
        _ => SvmMParams::new(c1, c1 * c2_factor, epsilon),
    };
    // CV working tolerances: prediction quality saturates well before the
    // certification-grade gap, and large-C cells on low-rank kernels
    // converge very slowly. A budget-capped solve is still feasible and
    // usable; the inner CV then judges it on validation error.
    p.tol = 1e-3;
    p.max_iter = 200_000;
    p
}

fn sub_gram(gram: &GramMatrix, idx: &[usize]) -> GramMatrix {
    let m = idx.len();
    let values = DMatrix::from_fn(m, m, |i, j| gram.values[(idx[i], idx[j])]);
    GramMatrix {
        values,
        spec: gram.spec.clone(),
        row_ids: idx.to_vec(),
    }
}

/// Error rate of a Gram-expansion predictor on held-out columns.
fn gram_val_error(
    gram: &GramMatrix,
    labels: &[f64],
    train: &[usize],
    val: &[usize],
    delta: &[f64],
    bias: f64,
) -> f64 {
    let mut wrong = 0usize;
    for &j in val {
        let mut f = bias;
        for (p, &i) in train.iter().enumerate() {
            f += delta[p] * labels[i] * gram.values[(i, j)];
        }
        let pred = if f >= 0.0 { 1.0 } else { -1.0 };
        if pred != labels[j] {
            wrong += 1;
        }
    }
    wrong as f64 / val.len() as f64
}

/// Inner-CV selection of `C1` for a Gram-based dual machine. Ties go to
/// the smallest grid value.
fn select_c_single(
    gram: &GramMatrix,
    train_set: &Dataset,
    folds: &FoldAssignment,
    config: &ExperimentConfig,
    kind: ModelKind,
) -> Result<f64> {
    let mut best = (f64::INFINITY, config.c_grid[0]);
    for &c in &config.c_grid {
        let params = params_for(kind, c, config.c2_factor, config.epsilon);
        let mut total = 0.0;
        for f in 0..folds.k {
            let tr = folds.train_indices(f);
            let va = folds.fold_indices(f);
            let sub = sub_gram(gram, &tr);
            let sub_labels: Vec<f64> = tr.iter().map(|&i| train_set.labels[i]).collect();
            if !sub_labels.iter().any(|&y| y > 0.0) || !sub_labels.iter().any(|&y| y < 0.0) {
                return Err(Error::Data("inner fold lost a class".into()));
            }
            let sol = solve_dual(&sub, &sub_labels, &params)?;
            total += gram_val_error(gram, &train_set.labels, &tr, &va, &sol.delta(), sol.bias);
        }
        let avg = total / folds.k as f64;
        if avg < best.0 {
            best = (avg, c);
        }
    }
    Ok(best.1)
}

/// Inner-CV selection of `(C, lambda)` for the whitened linear machine.
/// Ties go to the smallest `C`, then the smallest `lambda`.
fn select_c_lambda_svm_fda(
    train_set: &Dataset,
    folds: &FoldAssignment,
    config: &ExperimentConfig,
) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, config.c_grid[0], config.lambda_grid[0]);
    for &c in &config.c_grid {
        for &lambda in &config.lambda_grid {
            let params = params_for(ModelKind::SvmFda, c, config.c2_factor, config.epsilon);
            let mut total = 0.0;
            for f in 0..folds.k {
                let tr = folds.train_indices(f);
                let va = folds.fold_indices(f);
                let model = train_svm_fda(&train_set.subset(&tr, "inner"), &params, lambda)?;
                let mut wrong = 0usize;
                for &j in &va {
                    let x: Vec<f64> = train_set.features.row(j).iter().copied().collect();
                    if model.predict(&x)? != train_set.labels[j] {
                        wrong += 1;
                    }
                }
                total += wrong as f64 / va.len() as f64;
            }
            let avg = total / folds.k as f64;
            if avg < best.0 {
                best = (avg, c, lambda);
            }
        }
    }
    Ok((best.1, best.2))
}

/// Inner-CV selection of `C1` for an MKL machine over the bank.
fn select_c_mkl(
    bank: &KernelBank,
    train_set: &Dataset,
    folds: &FoldAssignment,
    config: &ExperimentConfig,
    kind: ModelKind,
) -> Result<f64> {
    let mut best = (f64::INFINITY, config.c_grid[0]);
    for &c in &config.c_grid {
        let params = MklParams::new(params_for(kind, c, config.c2_factor, config.epsilon));
        let mut total = 0.0;
        for f in 0..folds.k {
            let tr = folds.train_indices(f);
            let va = folds.fold_indices(f);
            let sub_bank = KernelBank {
                specs: bank.specs.clone(),
                grams: bank.grams.iter().map(|g| sub_gram(g, &tr)).collect(),
            };
            let sub_labels: Vec<f64> = tr.iter().map(|&i| train_set.labels[i]).collect();
            let sol = solve_mkl(&sub_bank, &sub_labels, &params, kind)?;
            // Validation decision values through the combined full-bank Gram.
            let delta = sol.inner.delta();
            let mut wrong = 0usize;
            for &j in &va {
                let mut fval = sol.inner.bias;
                for (p, &i) in tr.iter().enumerate() {
                    if delta[p] == 0.0 {
                        continue;
                    }
                    let mut k_ij = 0.0;
                    for (k, g) in bank.grams.iter().enumerate() {
                        if sol.mu[k] != 0.0 {
                            k_ij += sol.mu[k] * g.values[(i, j)];
                        }
                    }
                    fval += delta[p] * train_set.labels[i] * k_ij;
                }
                let pred = if fval >= 0.0 { 1.0 } else { -1.0 };
                if pred != train_set.labels[j] {
                    wrong += 1;
                }
            }
            total += wrong as f64 / va.len() as f64;
        }
        let avg = total / folds.k as f64;
        if avg < best.0 {
            best = (avg, c);
        }
    }
    Ok(best.1)
}

/// Kernel group label an algorithm contributes to. The linear machines
/// (`fda`, `svm-fda`) live only in the original feature space.
fn algo_kernels<'a>(kind: ModelKind, kernels: &'a [KernelSpec]) -> Vec<Option<&'a KernelSpec>> {
    match kind {
        ModelKind::Fda | ModelKind::SvmFda => vec![None],
        ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma => vec![None],
        _ => kernels.iter().map(Some).collect(),
    }
}

fn kernel_group_label(kind: ModelKind, spec: Option<&KernelSpec>) -> String {
    match (kind, spec) {
        (_, Some(s)) => s.label(),
        (ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma, None) => "bank".into(),
        // Original-space machines are grouped with the linear kernel.
        (_, None) => "linear".into(),
    }
}

struct CellTask {
    dataset_idx: usize,
    algorithm: ModelKind,
    kernel: Option<KernelSpec>,
    label: String,
}

fn run_cell(
    task: &CellTask,
    data: &Dataset,
    outer: &FoldAssignment,
    config: &ExperimentConfig,
) -> Result<(Vec<bool>, Vec<(f64, f64)>)> {
    let mut correct = vec![false; data.n()];
    let mut chosen = Vec::with_capacity(outer.k);
    for f in 0..outer.k {
        let tr = outer.train_indices(f);
        let te = outer.fold_indices(f);
        let raw_train = data.subset(&tr, "outer-train");
        let standardizer = fit_standardizer(&raw_train);
        let train_set = apply_standardizer(&standardizer, &raw_train)?;
        let inner_folds = make_folds(&train_set, config.inner_k, config.seed ^ (f as u64 + 1))?;

        let model: TrainedModel;
        let picked: (f64, f64);
        match task.algorithm {
            ModelKind::Fda => {
                picked = (0.0, 0.0);
                model = train_fda(&train_set)?;
            }
            ModelKind::SvmFda => {
                let (c, lambda) = select_c_lambda_svm_fda(&train_set, &inner_folds, config)?;
                picked = (c, lambda);
                model = train_svm_fda(&train_set, &params_for(ModelKind::SvmFda, c, config.c2_factor, config.epsilon), lambda)?;
            }
            ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma => {
                let specs = config.bank.clone().unwrap_or_default();
                let bank = KernelBank::build(specs, &train_set)?;
                let c = select_c_mkl(&bank, &train_set, &inner_folds, config, task.algorithm)?;
                picked = (c, 0.0);
                let params =
                    MklParams::new(params_for(task.algorithm, c, config.c2_factor, config.epsilon));
                model = train_mkl(&train_set, &bank, &params, task.algorithm)?;
            }
            kind => {
                let spec = task.kernel.as_ref().expect("single-kernel cell");
                let gram = crate::kernel::build_gram(spec, &train_set)?;
                let c = select_c_single(&gram, &train_set, &inner_folds, config, kind)?;
                picked = (c, 0.0);
                let params = params_for(kind, c, config.c2_factor, config.epsilon);
                model = train_svm_family(&train_set, spec, &params, kind)?;
            }
        }
        chosen.push(picked);
        for &j in &te {
            let raw: Vec<f64> = data.features.row(j).iter().copied().collect();
            let x = standardizer.transform_row(&raw)?;
            correct[j] = model.predict(&x)? == data.labels[j];
        }
    }
    Ok((correct, chosen))
}

/// Runs the full nested cross-validation experiment. `datasets` must
/// correspond positionally to `config.datasets`. Outer folds are shared by
/// every algorithm of a dataset; standardization is fit on each outer
/// training split only.
pub fn run_cv_experiment(
    config: &ExperimentConfig,
    datasets: &[Dataset],
) -> Result<ExperimentReport> {
    config.validate()?;
    if datasets.len() != config.datasets.len() {
        return Err(Error::DimMismatch {
            expected: config.datasets.len(),
            got: datasets.len(),
        });
    }
    let outer_folds: Vec<FoldAssignment> = datasets
        .iter()
        .map(|d| make_folds(d, config.outer_k, config.seed))
        .collect::<Result<Vec<_>>>()?;

    let mut tasks = Vec::new();
    for (di, _) in datasets.iter().enumerate() {
        for &algo in &config.algorithms {
            for spec in algo_kernels(algo, &config.kernels) {
                tasks.push(CellTask {
                    dataset_idx: di,
                    algorithm: algo,
                    kernel: spec.copied(),
                    label: kernel_group_label(algo, spec),
                });
            }
        }
    }
    let cells: Vec<CellResult> = tasks
        .par_iter()
        .map(|task| {
            let data = &datasets[task.dataset_idx];
            let outer = &outer_folds[task.dataset_idx];
            let name = config.datasets[task.dataset_idx].clone();
            match run_cell(task, data, outer, config) {
                Ok((correct, chosen)) => {
                    let wrong = correct.iter().filter(|&&c| !c).count();
                    CellResult {
                        dataset: name,
                        kernel: task.label.clone(),
                        algorithm: task.algorithm,
                        error_percent: Some(100.0 * wrong as f64 / correct.len() as f64),
                        correct: Some(correct),
                        chosen,
                        failed: None,
                    }
                }
                Err(e) => CellResult {
                    dataset: name,
                    kernel: task.label.clone(),
                    algorithm: task.algorithm,
                    error_percent: None,
                    correct: None,
                    chosen: Vec::new(),
                    failed: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        cells,
    })
}

impl ExperimentReport {
    /// The cell for `(dataset, kernel, algorithm)`, if present.
    pub fn cell(&self, dataset: &str, kernel: &str, algorithm: ModelKind) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.kernel == kernel && c.algorithm == algorithm)
    }
}

fn fmt_error(cell: &CellResult) -> String {
    match cell.error_percent {
        Some(e) => format!("{e:.2}"),
        None => "failed".into(),
    }
}

/// Writes `report.csv`, `report.json`, `scores.csv`, and `report.md` into
/// `dir`. Output is deterministic: identical reports produce byte-identical
/// files.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut csv = String::from("dataset,kernel,algorithm,error_percent,status\n");
    for cell in &report.cells {
        let status = if cell.failed.is_some() { "failed" } else { "ok" };
        let err = match cell.error_percent {
            Some(e) => format!("{e:.2}"),
            None => String::new(),
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.dataset,
            cell.kernel,
            algo_label(cell.algorithm),
            err,
            status
        ));
    }
    std::fs::write(dir.join("report.csv"), csv)?;

    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;

    let scores = score_table(report)?;
    let mut scsv = String::from("algorithm,kernel,points\n");
    for (ai, &algo) in scores.algorithms.iter().enumerate() {
        for (ki, kernel) in scores.kernels.iter().enumerate() {
            scsv.push_str(&format!(
                "{},{},{}\n",
                algo_label(algo),
                kernel,
                scores.points[ai][ki]
            ));
        }
        scsv.push_str(&format!("{},total,{}\n", algo_label(algo), scores.totals[ai]));
    }
    std::fs::write(dir.join("scores.csv"), scsv)?;

    std::fs::write(dir.join("report.md"), markdown_table(report))?;
    Ok(())
}

/// Markdown rendering: one row per (dataset, kernel), one column per
/// algorithm; per-row minima (including ties) are bold.
pub fn markdown_table(report: &ExperimentReport) -> String {
    let algos = &report.config.algorithms;
    let mut out = String::from("| dataset | kernel |");
    for &a in algos {
        out.push_str(&format!(" {} |", algo_label(a)));
    }
    out.push('\n');
    out.push_str("|---|---|");
    out.push_str(&"---|".repeat(algos.len()));
    out.push('\n');

    let mut keys: Vec<(String, String)> = Vec::new();
    for cell in &report.cells {
        let key = (cell.dataset.clone(), cell.kernel.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (dataset, kernel) in keys {
        let row: Vec<Option<&CellResult>> = algos
            .iter()
            .map(|&a| report.cell(&dataset, &kernel, a))
            .collect();
        let min = row
            .iter()
            .flatten()
            .filter_map(|c| c.error_percent)
            .fold(f64::INFINITY, f64::min);
        out.push_str(&format!("| {dataset} | {kernel} |"));
        for c in row {
            let text = match c {
                Some(cell) => {
                    let t = fmt_error(cell);
                    match cell.error_percent {
                        Some(e) if e == min => format!("**{t}**"),
                        _ => t,
                    }
                }
                None => "--".into(),
            };
            out.push_str(&format!(" {text} |"));
        }
        out.push('\n');
    }
    out
}
