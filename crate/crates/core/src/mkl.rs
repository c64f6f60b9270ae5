//! Multiple kernel learning: alternating optimization of simplex kernel
//! weights and the band-constrained SVM dual, SimpleMKL style.

use crate::error::{Error, Result};
use crate::kernel::{combine_grams, KernelBank};
use crate::models::{ModelKernel, ModelKind, SupportTerm, TrainDiagnostics, TrainedModel};
use crate::qp::{solve_dual, DualSolution, SolveStatus, SvmMParams};
use rayon::prelude::*;

/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// Line-search backtracking factor.
const BACKTRACK: f64 = 0.5;
/// Maximum line-search halvings per outer iteration.
const MAX_HALVINGS: usize = 30;
/// Outer loop also stops when the relative objective improvement stays
/// below this over [`STALL_WINDOW`] iterations.
const STALL_TOL: f64 = 1e-8;
const STALL_WINDOW: usize = 3;

/// Parameters of the outer kernel-weight optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MklParams {
    pub svm: SvmMParams,
    /// Convergence threshold on `max |delta mu|` per outer step.
    pub mu_tol: f64,
    pub outer_max_iter: usize,
}

impl Default for MklParams {
    fn default() -> Self {
        Self {
            svm: SvmMParams::standard_svm(1.0),
            mu_tol: 1e-4,
            outer_max_iter: 200,
        }
    }
}

impl MklParams {
    pub fn new(svm: SvmMParams) -> Self {
        Self {
            svm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.svm.validate()?;
        if !(self.mu_tol > 0.0) {
            return Err(Error::Config("mu_tol must be > 0".into()));
        }
        if self.outer_max_iter < 1 {
            return Err(Error::Config("outer_max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of the outer optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MklSolution {
    /// Learned simplex weights over the bank.
    pub mu: Vec<f64>,
    /// Dual solution at the final combined Gram.
    pub inner: DualSolution,
    /// `J(mu)` after each outer iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub status: SolveStatus,
}

fn effective_params(params: &MklParams, kind: ModelKind) -> Result<SvmMParams> {
    let mut svm = params.svm;
    // Gradient validity needs a tighter inner solve than the prediction
    // default.
    svm.tol = svm.tol.min(1e-8);
    match kind {
        ModelKind::MklM => {}
        ModelKind::EpsMkl => svm.epsilon = 0.0,
        ModelKind::MklGamma => {
            svm.epsilon = f64::INFINITY;
            svm.c2 = 0.0;
        }
        _ => {
            return Err(Error::Config(format!(
                "train_mkl does not handle {kind:?}"
            )))
        }
    }
    Ok(svm)
}

fn solve_at(
    bank: &KernelBank,
    labels: &[f64],
    mu: &[f64],
    svm: &SvmMParams,
) -> Result<DualSolution> {
    let gram = combine_grams(bank, mu)?;
    let sol = solve_dual(&gram, labels, svm)?;
    if !sol.objective.is_finite() {
        return Err(Error::Solver("non-finite MKL objective".into()));
    }
    Ok(sol)
}

/// Gradient of `J(mu)`:
/// `dJ/dmu_k = -1/2 sum_ij delta_i delta_j y_i y_j K_k(x_i, x_j)`.
pub fn mkl_gradient(bank: &KernelBank, labels: &[f64], inner: &DualSolution) -> Result<Vec<f64>> {
    let n = labels.len();
    if inner.alpha.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: inner.alpha.len(),
        });
    }
    let delta = inner.delta();
    let s: Vec<f64> = (0..n).map(|i| delta[i] * labels[i]).collect();
    bank.grams
        .par_iter()
        .map(|g| {
            if g.n() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    got: g.n(),
                });
            }
            let mut quad = 0.0;
            for i in 0..n {
                if s[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    quad += s[i] * s[j] * g.values[(i, j)];
                }
            }
            Ok(-0.5 * quad)
        })
        .collect()
}

/// Reduced-gradient descent direction on the simplex, relative to the
/// largest `mu` component (ties: lowest index). `d` sums to zero and is
/// non-negative wherever `mu_k = 0`.
fn descent_direction(mu: &[f64], grad: &[f64]) -> Vec<f64> {
    let r = mu
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap();
    let mut d = vec![0.0; mu.len()];
    let mut sum = 0.0;
    for k in 0..mu.len() {
        if k == r {
            continue;
        }
        let reduced = grad[k] - grad[r];
        if mu[k] <= 0.0 && reduced > 0.0 {
            continue; // moving further negative is infeasible
        }
        d[k] = -reduced;
        sum += d[k];
    }
    d[r] = -sum;
    d
}

/// Largest feasible multiple of `d` before some coordinate hits zero.
fn max_feasible_step(mu: &[f64], d: &[f64]) -> f64 {
    let mut s = f64::INFINITY;
    for k in 0..mu.len() {
        if d[k] < 0.0 {
            s = s.min(mu[k] / -d[k]);
        }
    }
    s
}

fn apply_step(mu: &[f64], d: &[f64], step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = mu
        .iter()
        .zip(d)
        .map(|(m, dk)| (m + step * dk).max(0.0))
        .collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for v in &mut out {
            *v /= total;
        }
    }
    out
}

/// One projected reduced-gradient step of size `step`, clipped at the
/// first coordinate reaching zero and renormalized onto the simplex.
pub fn simplex_step(mu: &[f64], grad: &[f64], step: f64) -> Result<Vec<f64>> {
    if mu.is_empty() || mu.len() != grad.len() {
        return Err(Error::DimMismatch {
            expected: mu.len(),
            got: grad.len(),
        });
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || mu.iter().any(|&m| m < 0.0) {
        return Err(Error::Config(format!("mu is not on the simplex (sum = {sum})")));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Config("non-finite gradient".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Config("step must be > 0".into()));
    }
    let d = descent_direction(mu, grad);
    let clipped = step.min(max_feasible_step(mu, &d));
    if !clipped.is_finite() || clipped <= 0.0 {
        return Ok(mu.to_vec());
    }
    Ok(apply_step(mu, &d, clipped))
}

/// Runs the outer optimization from an explicit starting point.
pub fn solve_mkl_from(
    bank: &KernelBank,
    labels: &[f64],
    params: &MklParams,
    kind: ModelKind,
    mu0: Vec<f64>,
) -> Result<MklSolution> {
    params.validate()?;
    if mu0.len() != bank.len() {
        return Err(Error::DimMismatch {
            expected: bank.len(),
            got: mu0.len(),
        });
    }
    let svm = effective_params(params, kind)?;
    let mut mu = mu0;
    let mut inner = solve_at(bank, labels, &mu, &svm)?;
    let mut trace = vec![inner.objective];
    let mut status = SolveStatus::MaxIter;

    for _ in 0..params.outer_max_iter {
        let grad = mkl_gradient(bank, labels, &inner)?;
        let d = descent_direction(&mu, &grad);
        let slope: f64 = grad.iter().zip(&d).map(|(g, dk)| g * dk).sum();
        let d_norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if d_norm < 1e-15 || slope >= 0.0 {
            status = SolveStatus::Converged;
            break;
        }
        // Start at the boundary of the feasible segment and backtrack.
        let s_max = max_feasible_step(&mu, &d).min(1.0 / d_norm);
        let current = inner.objective;
        let mut accepted = None;
        let mut s = s_max;
        for _ in 0..=MAX_HALVINGS {
            let candidate = apply_step(&mu, &d, s);
            let sol = solve_at(bank, labels, &candidate, &svm)?;
            if sol.objective <= current + ARMIJO_C * s * slope {
                accepted = Some((candidate, sol));
                break;
            }
            s *= BACKTRACK;
        }
        let Some((new_mu, new_inner)) = accepted else {
            // No step achieves sufficient decrease: stationary in practice.
            status = SolveStatus::Converged;
            break;
        };
        let delta_mu = mu
            .iter()
            .zip(&new_mu)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        mu = new_mu;
        inner = new_inner;
        trace.push(inner.objective);
        if delta_mu < params.mu_tol {
            status = SolveStatus::Converged;
            break;
        }
        let w = STALL_WINDOW;
        if trace.len() > w {
            let old = trace[trace.len() - 1 - w];
            let rel = (old - inner.objective).abs() / old.abs().max(1.0);
            if rel < STALL_TOL {
                status = SolveStatus::Converged;
                break;
            }
        }
    }
    Ok(MklSolution {
        mu,
        inner,
        objective_trace: trace,
        status,
    })
}

/// Runs the outer optimization from the uniform starting point.
pub fn solve_mkl(
    bank: &KernelBank,
    labels: &[f64],
    params: &MklParams,
    kind: ModelKind,
) -> Result<MklSolution> {
    let m = bank.len();
    solve_mkl_from(bank, labels, params, kind, vec![1.0 / m as f64; m])
}

/// Trains a multi-kernel classifier. `kind` selects the band
/// configuration: `MklM` uses the caller's epsilon, `EpsMkl` forces
/// `epsilon = 0`, and `MklGamma` disables the band entirely.
pub fn train_mkl(
    data: &crate::data::Dataset,
    bank: &KernelBank,
    params: &MklParams,
    kind: ModelKind,
) -> Result<TrainedModel> {
    if !data.has_both_classes() {
        return Err(Error::Data("training fold has a single class".into()));
    }
    let solution = solve_mkl(bank, &data.labels, params, kind)?;
    let delta = solution.inner.delta();
    let support: Vec<SupportTerm> = (0..data.n())
        .filter_map(|i| {
            let c = delta[i] * data.labels[i];
            if c.abs() < 1e-12 {
                None
            } else {
                Some(SupportTerm {
                    x: data.features.row(i).iter().copied().collect(),
                    c,
                })
            }
        })
        .collect();
    Ok(TrainedModel {
        version: 1,
        kind,
        kernel: ModelKernel::Combined {
            specs: bank.specs.clone(),
            mu: solution.mu.clone(),
        },
        support,
        bias: solution.inner.bias,
        transform: None,
        fda_direction: None,
        standardizer: None,
        diagnostics: Some(TrainDiagnostics {
            objective: solution.inner.objective,
            kkt_residual: solution.inner.kkt_residual,
            iterations: solution.inner.iterations,
            status: solution.status,
        }),
    })
}
