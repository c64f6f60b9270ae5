//! Trainers and predictors for the single-kernel classifiers, plus
//! within/between-class distance diagnostics.

use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::kernel::{build_gram, eval_kernel_normalized, KernelSpec};
use crate::qp::{solve_dual, DualSolution, SvmMParams};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Support coefficients below this magnitude are pruned at serialization.
const COEF_PRUNE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    SvmM,
    EpsSvm,
    SvmFda,
    Fda,
    MklM,
    EpsMkl,
    MklGamma,
}

/// Kernel of a trained model: a single kernel or a learned convex
/// combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelKernel {
    Single(KernelSpec),
    Combined { specs: Vec<KernelSpec>, mu: Vec<f64> },
}

impl ModelKernel {
    /// Evaluates the model kernel between two instances, respecting each
    /// basis kernel's normalization.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        match self {
            ModelKernel::Single(spec) => eval_kernel_normalized(spec, x, z),
            ModelKernel::Combined { specs, mu } => {
                let mut total = 0.0;
                for (spec, &w) in specs.iter().zip(mu) {
                    if w != 0.0 {
                        total += w * eval_kernel_normalized(spec, x, z)?;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// A kernel expansion term: stored instance and its folded coefficient
/// `c_i = (alpha_i - beta_i) y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportTerm {
    pub x: Vec<f64>,
    pub c: f64,
}

/// Solver diagnostics kept alongside a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: crate::qp::SolveStatus,
}

/// A trained classifier with a kernelized (or linear) decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub kind: ModelKind,
    pub kernel: ModelKernel,
    /// Kernel expansion terms; empty for `fda`.
    pub support: Vec<SupportTerm>,
    pub bias: f64,
    /// Input transform applied before the kernel expansion (`svm_fda`
    /// whitening), stored row-major as `rows x cols`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<MatrixData>,
    /// Linear discriminant direction (`fda` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fda_direction: Option<Vec<f64>>,
    /// Standardizer to apply to raw inputs, when trained through a
    /// standardizing pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<TrainDiagnostics>,
}

/// Dense matrix in serializable row-major form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(), // row-major
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let m = self.to_matrix();
        let v = m * DVector::from_column_slice(x);
        Ok(v.as_slice().to_vec())
    }
}

impl TrainedModel {
    /// Raw decision value `sum_i c_i K(x_i, x) + b` (kernel models) or
    /// `w . x + b` (fda). The model's input transform and standardizer are
    /// applied first.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let staged: Vec<f64> = match &self.standardizer {
            Some(s) => s.transform_row(x)?,
            None => x.to_vec(),
        };
        let staged: Vec<f64> = match &self.transform {
            Some(t) => t.apply(&staged)?,
            None => staged,
        };
        if let Some(w) = &self.fda_direction {
            if w.len() != staged.len() {
                return Err(Error::DimMismatch {
                    expected: w.len(),
                    got: staged.len(),
                });
            }
            return Ok(w.iter().zip(&staged).map(|(a, b)| a * b).sum::<f64>() + self.bias);
        }
        let mut f = self.bias;
        for term in &self.support {
            f += term.c * self.kernel.eval(&term.x, &staged)?;
        }
        Ok(f)
    }

    /// Class prediction; ties at exactly zero go to `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(x)? >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Squared norm of the primal weight vector, via the kernel expansion
    /// `|w|^2 = sum_ij c_i c_j K(x_i, x_j)` (or directly for fda).
    pub fn weight_norm_sq(&self) -> Result<f64> {
        if let Some(w) = &self.fda_direction {
            return Ok(w.iter().map(|v| v * v).sum());
        }
        let mut total = 0.0;
        for a in &self.support {
            for b in &self.support {
                total += a.c * b.c * self.kernel.eval(&a.x, &b.x)?;
            }
        }
        Ok(total)
    }

    /// Materialized linear weight vector, available for linear-kernel
    /// expansions and fda. For `svm_fda` the returned vector lives in the
    /// original (pre-whitening) input space.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if let Some(w) = &self.fda_direction {
            return Some(w.clone());
        }
        let is_linear = matches!(
            self.kernel,
            ModelKernel::Single(KernelSpec {
                kind: crate::kernel::KernelKind::Linear,
                normalized: false,
            })
        );
        if !is_linear || self.support.is_empty() {
            return None;
        }
        let d = self.support[0].x.len();
        let mut w = vec![0.0; d];
        for term in &self.support {
            for j in 0..d {
                w[j] += term.c * term.x[j];
            }
        }
        // Pull back through the whitening transform: f(x) = w~ . (T x)
        // means w = T' w~ in the original space.
        if let Some(t) = &self.transform {
            let tm = t.to_matrix();
            let wv = tm.transpose() * DVector::from_column_slice(&w);
            return Some(wv.as_slice().to_vec());
        }
        Some(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn pack_support(data: &Dataset, solution: &DualSolution) -> Vec<SupportTerm> {
    let delta = solution.delta();
    (0..data.n())
        .filter_map(|i| {
            let c = delta[i] * data.labels[i];
            if c.abs() < COEF_PRUNE {
                None
            } else {
                Some(SupportTerm {
                    x: data.features.row(i).iter().copied().collect(),
                    c,
                })
            }
        })
        .collect()
}

/// Trains one of the three kernelized SVM variants. `kind = Svm` forces
/// `epsilon = +inf`; `kind = EpsSvm` forces `epsilon = 0`.
pub fn train_svm_family(
    data: &Dataset,
    kernel: &KernelSpec,
    params: &SvmMParams,
    kind: ModelKind,
) -> Result<TrainedModel> {
    if !data.has_both_classes() {
        return Err(Error::Data("training fold has a single class".into()));
    }
    let mut params = *params;
    match kind {
        ModelKind::Svm => {
            params.epsilon = f64::INFINITY;
            params.c2 = 0.0;
        }
        ModelKind::EpsSvm => params.epsilon = 0.0,
        ModelKind::SvmM => {}
        _ => {
            return Err(Error::Config(format!(
                "train_svm_family does not handle {kind:?}"
            )))
        }
    }
    let gram = build_gram(kernel, data)?;
    let solution = solve_dual(&gram, &data.labels, &params)?;
    Ok(TrainedModel {
        version: 1,
        kind,
        kernel: ModelKernel::Single(*kernel),
        support: pack_support(data, &solution),
        bias: solution.bias,
        transform: None,
        fda_direction: None,
        standardizer: None,
        diagnostics: Some(TrainDiagnostics {
            objective: solution.objective,
            kkt_residual: solution.kkt_residual,
            iterations: solution.iterations,
            status: solution.status,
        }),
    })
}

/// Class means and scatter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterStats {
    /// Mean of the positive class.
    pub m1: DVector<f64>,
    /// Mean of the negative class.
    pub m2: DVector<f64>,
    pub s_w: DMatrix<f64>,
    pub s_b: DMatrix<f64>,
    pub s_t: DMatrix<f64>,
}

/// Within/between/total scatter with the unweighted between-class
/// convention `S_B = (m1 - m2)(m1 - m2)^T`. Under that convention
/// `S_T = S_W + S_B`.
pub fn compute_scatter(data: &Dataset) -> Result<ScatterStats> {
    let (pos, neg) = data.class_indices();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Data("both classes must be non-empty".into()));
    }
    let d = data.dim();
    let class_mean = |ix: &[usize]| {
        let mut m = DVector::zeros(d);
        for &i in ix {
            m += data.features.row(i).transpose();
        }
        m / ix.len() as f64
    };
    let m1 = class_mean(&pos);
    let m2 = class_mean(&neg);
    let mut s_w = DMatrix::zeros(d, d);
    for (ix, m) in [(&pos, &m1), (&neg, &m2)] {
        for &i in ix.iter() {
            let diff = data.features.row(i).transpose() - m;
            s_w += &diff * diff.transpose();
        }
    }
    let dm = &m1 - &m2;
    let s_b = &dm * dm.transpose();
    let s_t = &s_w + &s_b;
    Ok(ScatterStats { m1, m2, s_w, s_b, s_t })
}

/// Fisher discriminant: `w = (S_W + ridge I)^-1 (m1 - m2)`, threshold at
/// the midpoint of the projected class means.
pub fn train_fda(data: &Dataset) -> Result<TrainedModel> {
    let stats = compute_scatter(data)?;
    let d = data.dim();
    let trace: f64 = stats.s_w.diagonal().iter().sum();
    let ridge = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    let reg = &stats.s_w + DMatrix::identity(d, d) * ridge;
    let chol = reg
        .cholesky()
        .ok_or_else(|| Error::Solver("within-class scatter is not factorizable".into()))?;
    let w = chol.solve(&(&stats.m1 - &stats.m2));
    let bias = -0.5 * w.dot(&(&stats.m1 + &stats.m2));
    Ok(TrainedModel {
        version: 1,
        kind: ModelKind::Fda,
        kernel: ModelKernel::Single(KernelSpec::linear().with_normalized(false)),
        support: Vec::new(),
        bias,
        transform: None,
        fda_direction: Some(w.as_slice().to_vec()),
        standardizer: None,
        diagnostics: None,
    })
}

/// SVM regularized by the Fisher within-class scatter: minimizes
/// `w' (lambda S_W + I) w` under the margin constraints, realized exactly
/// by whitening with `M = U L U'` and training a standard linear SVM on
/// `x~ = L^-1/2 U' x`. Original feature space only.
pub fn train_svm_fda(data: &Dataset, params: &SvmMParams, lambda: f64) -> Result<TrainedModel> {
    if lambda < 0.0 {
        return Err(Error::Config("lambda must be >= 0".into()));
    }
    let stats = compute_scatter(data)?;
    let d = data.dim();
    let m = &stats.s_w * lambda + DMatrix::identity(d, d);
    let eig = m.symmetric_eigen();
    // M >= I, so all eigenvalues are >= 1 and the whitening is well posed.
    let mut inv_sqrt = DMatrix::zeros(d, d);
    for j in 0..d {
        inv_sqrt[(j, j)] = 1.0 / eig.eigenvalues[j].sqrt();
    }
    let transform = inv_sqrt * eig.eigenvectors.transpose();

    let mut whitened = data.clone();
    for i in 0..data.n() {
        let x = data.features.row(i).transpose();
        let tx = &transform * x;
        whitened.features.row_mut(i).copy_from(&tx.transpose());
    }
    let kernel = KernelSpec::linear().with_normalized(false);
    let mut svm_params = *params;
    svm_params.epsilon = f64::INFINITY;
    svm_params.c2 = 0.0;
    let mut model = train_svm_family(&whitened, &kernel, &svm_params, ModelKind::Svm)?;
    model.kind = ModelKind::SvmFda;
    model.transform = Some(MatrixData::from_matrix(&transform));
    Ok(model)
}

/// Within/between-class distance diagnostics of a trained model over a
/// dataset, and the four trade-off cost functions at `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Margin `gamma = 1 / |w|`.
    pub margin: f64,
    /// Between-class distance `2 gamma`.
    pub d_b: f64,
    /// Sum of distances beyond the class margin hyperplane, per class
    /// `(positive, negative)`.
    pub d_w1_per_class: (f64, f64),
    /// Band width (maximum distance beyond the margin hyperplane), per
    /// class.
    pub d_w2_per_class: (f64, f64),
    /// `w' S_W w`, reported when the weight vector is materializable.
    pub d_w3: Option<f64>,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

/// Computes a [`DistanceReport`]. Points inside the margin contribute zero
/// to the within-band distances.
pub fn distance_report(model: &TrainedModel, data: &Dataset, lambda: f64) -> Result<DistanceReport> {
    let norm_sq = model.weight_norm_sq()?;
    if !(norm_sq > 0.0) {
        return Err(Error::Solver("zero-norm model has no margin".into()));
    }
    let norm = norm_sq.sqrt();
    let margin = 1.0 / norm;
    let mut d_w1 = [0.0f64; 2];
    let mut d_w2 = [0.0f64; 2];
    for i in 0..data.n() {
        let x: Vec<f64> = data.features.row(i).iter().copied().collect();
        let yf = data.labels[i] * model.decision_value(&x)?;
        let class = if data.labels[i] > 0.0 { 0 } else { 1 };
        let beyond = (yf - 1.0).max(0.0) / norm;
        d_w1[class] += beyond;
        d_w2[class] = d_w2[class].max(beyond);
    }
    let d_b = 2.0 * margin;
    let d_w_total = d_w2[0] + d_w2[1];
    let d_w3 = match model.linear_weights() {
        Some(w) => {
            let stats = compute_scatter(data)?;
            let wv = DVector::from_column_slice(&w);
            Some((&stats.s_w * &wv).dot(&wv))
        }
        None => None,
    };
    Ok(DistanceReport {
        margin,
        d_b,
        d_w1_per_class: (d_w1[0], d_w1[1]),
        d_w2_per_class: (d_w2[0], d_w2[1]),
        d_w3,
        f1: cost_f1(d_b, d_w_total),
        f2: cost_f2(d_b, d_w_total, lambda),
        f3: cost_f3(d_b, d_w_total, lambda),
        f4: cost_f4(d_b, d_w_total, lambda),
    })
}

pub fn cost_f1(d_b: f64, d_w: f64) -> f64 {
    d_b / d_w
}

pub fn cost_f2(d_b: f64, d_w: f64, lambda: f64) -> f64 {
    d_b + lambda / d_w
}

pub fn cost_f3(d_b: f64, d_w: f64, lambda: f64) -> f64 {
    d_b - lambda * d_w
}

pub fn cost_f4(d_b: f64, d_w: f64, lambda: f64) -> f64 {
    1.0 / d_b + lambda * d_w
}

/// The `l_mu` norm `|w / mu|_p` (elementwise division), `p` in {1, 2}.
pub fn l_mu_norm(w: &[f64], mu: &[f64], p: u32) -> Result<f64> {
    if w.len() != mu.len() {
        return Err(Error::DimMismatch {
            expected: w.len(),
            got: mu.len(),
        });
    }
    if mu.iter().any(|&m| m <= 0.0) {
        return Err(Error::Config("all mu components must be > 0".into()));
    }
    let scaled = w.iter().zip(mu).map(|(a, b)| a / b);
    Ok(match p {
        1 => scaled.map(f64::abs).sum(),
        2 => scaled.map(|v| v * v).sum::<f64>().sqrt(),
        _ => return Err(Error::Config(format!("unsupported norm order {p}"))),
    })
}

#[cfg(test)]
mod tests;
