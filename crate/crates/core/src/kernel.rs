//! Kernel functions, Gram matrices, normalization, and convex combination.

use crate::data::Dataset;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Functional form of a kernel.
///
/// The polynomial kernel is the inhomogeneous `(x.z + 1)^degree`, so degree
/// one differs from the linear kernel by a constant. The Gaussian kernel is
/// `exp(-|x - z|^2 / (2 sigma^2))`; the `exp(-|x - z|^2 / sigma^2)`
/// convention is available via [`KernelKind::GaussianNoHalf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32 },
    Gaussian { sigma: f64 },
    GaussianNoHalf { sigma: f64 },
}

/// A kernel function plus the Gram-level normalization switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub normalized: bool,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            normalized: true,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial { degree },
            normalized: true,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            kind: KernelKind::Gaussian { sigma },
            normalized: true,
        }
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Polynomial { degree } if degree < 1 => {
                Err(Error::Kernel("polynomial degree must be >= 1".into()))
            }
            KernelKind::Gaussian { sigma } | KernelKind::GaussianNoHalf { sigma }
                if sigma <= 0.0 =>
            {
                Err(Error::Kernel("gaussian sigma must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Short display label, e.g. `linear`, `poly2`, `gauss1`.
    pub fn label(&self) -> String {
        match self.kind {
            KernelKind::Linear => "linear".into(),
            KernelKind::Polynomial { degree } => format!("poly{degree}"),
            KernelKind::Gaussian { sigma } | KernelKind::GaussianNoHalf { sigma } => {
                format!("gauss{sigma}")
            }
        }
    }
}

/// Evaluates the raw (un-normalized) kernel function.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    let dot = || x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    let sqdist = || x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    Ok(match spec.kind {
        KernelKind::Linear => dot(),
        KernelKind::Polynomial { degree } => (dot() + 1.0).powi(degree as i32),
        KernelKind::Gaussian { sigma } => (-sqdist() / (2.0 * sigma * sigma)).exp(),
        KernelKind::GaussianNoHalf { sigma } => (-sqdist() / (sigma * sigma)).exp(),
    })
}

/// Kernel evaluation respecting the spec's normalization:
/// `K(x,z) / sqrt(K(x,x) K(z,z))` when `normalized` is set.
pub fn eval_kernel_normalized(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    let k = eval_kernel(spec, x, z)?;
    if !spec.normalized {
        return Ok(k);
    }
    let kxx = eval_kernel(spec, x, x)?;
    let kzz = eval_kernel(spec, z, z)?;
    if kxx <= 0.0 || kzz <= 0.0 {
        return Err(Error::Kernel(
            "cannot normalize: non-positive self-similarity".into(),
        ));
    }
    Ok(k / (kxx * kzz).sqrt())
}

/// What a Gram matrix was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GramSpec {
    Single(KernelSpec),
    Combined { specs: Vec<KernelSpec>, mu: Vec<f64> },
}

/// A symmetric pairwise-kernel matrix over a set of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub spec: GramSpec,
    pub row_ids: Vec<usize>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Builds the Gram matrix of `spec` over the dataset rows, computing the
/// upper triangle once. Applies normalization when the spec asks for it.
pub fn build_gram(spec: &KernelSpec, data: &Dataset) -> Result<GramMatrix> {
    spec.validate()?;
    let n = data.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.features.row(i).iter().copied().collect())
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = eval_kernel(spec, &rows[i], &rows[j])?;
            values[(i, j)] = k;
            values[(j, i)] = k;
        }
    }
    let g = GramMatrix {
        values,
        spec: GramSpec::Single(*spec),
        row_ids: (0..n).collect(),
    };
    if spec.normalized {
        normalize_gram(&g)
    } else {
        Ok(g)
    }
}

/// Cosine normalization `K_ij / sqrt(K_ii K_jj)`. Idempotent; the output
/// diagonal is exactly one.
pub fn normalize_gram(g: &GramMatrix) -> Result<GramMatrix> {
    let n = g.n();
    for i in 0..n {
        if g.values[(i, i)] <= 0.0 {
            return Err(Error::Kernel(format!(
                "non-positive Gram diagonal at index {i}: {}",
                g.values[(i, i)]
            )));
        }
    }
    let scale: Vec<f64> = (0..n).map(|i| g.values[(i, i)].sqrt()).collect();
    let mut values = g.values.clone();
    for i in 0..n {
        for j in 0..n {
            values[(i, j)] /= scale[i] * scale[j];
        }
        values[(i, i)] = 1.0;
    }
    Ok(GramMatrix {
        values,
        spec: g.spec.clone(),
        row_ids: g.row_ids.clone(),
    })
}

/// A set of basis kernels with their Gram matrices over common instances.
#[derive(Debug, Clone)]
pub struct KernelBank {
    pub specs: Vec<KernelSpec>,
    pub grams: Vec<GramMatrix>,
}

impl KernelBank {
    pub fn build(specs: Vec<KernelSpec>, data: &Dataset) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Kernel("kernel bank must be non-empty".into()));
        }
        let grams = specs
            .iter()
            .map(|s| build_gram(s, data))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { specs, grams })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// The 20-kernel experimental bank: polynomial degrees 1..=10 and
    /// Gaussians with sigma in {0.5, 1, 2, 5, 7, 10, 12, 15, 17, 20},
    /// each normalized.
    pub fn default20_specs(normalized: bool) -> Vec<KernelSpec> {
        let mut specs: Vec<KernelSpec> = (1..=10)
            .map(|d| KernelSpec::polynomial(d).with_normalized(normalized))
            .collect();
        for sigma in [0.5, 1.0, 2.0, 5.0, 7.0, 10.0, 12.0, 15.0, 17.0, 20.0] {
            specs.push(KernelSpec::gaussian(sigma).with_normalized(normalized));
        }
        specs
    }
}

/// Convex combination `K_mu = sum_k mu_k K_k` of the bank's Gram matrices.
pub fn combine_grams(bank: &KernelBank, mu: &[f64]) -> Result<GramMatrix> {
    if mu.len() != bank.len() {
        return Err(Error::DimMismatch {
            expected: bank.len(),
            got: mu.len(),
        });
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || mu.iter().any(|&m| m < 0.0) {
        return Err(Error::Kernel(format!(
            "mu is not on the simplex (sum = {sum})"
        )));
    }
    let n = bank.grams[0].n();
    for g in &bank.grams {
        if g.n() != n || g.row_ids != bank.grams[0].row_ids {
            return Err(Error::Kernel("bank grams are inconsistent".into()));
        }
    }
    let mut values = DMatrix::zeros(n, n);
    for (k, g) in bank.grams.iter().enumerate() {
        if mu[k] != 0.0 {
            values += &g.values * mu[k];
        }
    }
    Ok(GramMatrix {
        values,
        spec: GramSpec::Combined {
            specs: bank.specs.clone(),
            mu: mu.to_vec(),
        },
        row_ids: bank.grams[0].row_ids.clone(),
    })
}
