//! Solver for the band-constrained SVM dual, KKT certification, and an
//! independent projected-gradient oracle.
//!
//! The dual being solved is, over multipliers `alpha` (margin constraints)
//! and `beta` (band constraints):
//!
//! ```text
//! max  sum_i [alpha_i - (1+eps) beta_i]
//!      - 1/2 sum_ij (alpha_i - beta_i)(alpha_j - beta_j) y_i y_j K_ij
//! s.t. sum_i (alpha_i - beta_i) y_i = 0,
//!      0 <= alpha_i <= C1,  0 <= beta_i <= C2
//! ```
//!
//! `eps = +inf` pins `beta = 0` and recovers the standard SVM dual;
//! `eps = 0` is the epsilon-SVM special case.

mod oracle;
mod smo;

pub use oracle::oracle_solve;
pub use smo::solve_dual;

use crate::error::{Error, Result};
use crate::kernel::GramMatrix;
use serde::{Deserialize, Serialize};

/// Hyperparameters of the band-constrained SVM dual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmMParams {
    /// Margin-slack penalty C1 (> 0).
    pub c1: f64,
    /// Band-slack penalty C2 (>= 0).
    pub c2: f64,
    /// Band width as a multiple of the margin; `+inf` disables the band.
    pub epsilon: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Pair-update budget.
    pub max_iter: usize,
}

impl SvmMParams {
    pub fn new(c1: f64, c2: f64, epsilon: f64) -> Self {
        Self {
            c1,
            c2,
            epsilon,
            tol: 1e-6,
            max_iter: 1_000_000,
        }
    }

    /// Standard SVM: no band.
    pub fn standard_svm(c1: f64) -> Self {
        Self::new(c1, 0.0, f64::INFINITY)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0) {
            return Err(Error::Config(format!("c1 must be > 0, got {}", self.c1)));
        }
        if !(self.c2 >= 0.0) {
            return Err(Error::Config(format!("c2 must be >= 0, got {}", self.c2)));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be >= 0 (or +inf), got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be > 0".into()));
        }
        Ok(())
    }

    /// True when the beta multipliers can be nonzero.
    pub fn band_active(&self) -> bool {
        self.epsilon.is_finite() && self.c2 > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    InfeasibleInput,
}

/// Solution of the dual, with a KKT certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub bias: f64,
    /// Dual objective value at `(alpha, beta)`.
    pub objective: f64,
    /// Residual reported by [`check_kkt`] at return time.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl DualSolution {
    /// Support coefficients `delta_i = alpha_i - beta_i`.
    pub fn delta(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| a - b)
            .collect()
    }
}

pub(crate) fn validate_problem(gram: &GramMatrix, labels: &[f64]) -> Result<()> {
    let n = labels.len();
    if gram.n() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: gram.n(),
        });
    }
    if gram.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite Gram matrix".into()));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Solver("labels must be +1 or -1".into()));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    if pos == 0 || pos == n {
        return Err(Error::Solver("both classes must be present".into()));
    }
    Ok(())
}

/// Computes the dual objective at `(alpha, beta)`.
pub fn dual_objective(
    gram: &GramMatrix,
    labels: &[f64],
    params: &SvmMParams,
    alpha: &[f64],
    beta: &[f64],
) -> f64 {
    let n = labels.len();
    let eps_term = if params.epsilon.is_finite() {
        1.0 + params.epsilon
    } else {
        1.0
    };
    let mut linear = 0.0;
    let mut s = vec![0.0; n];
    for i in 0..n {
        linear += alpha[i] - eps_term * beta[i];
        s[i] = (alpha[i] - beta[i]) * labels[i];
    }
    let mut quad = 0.0;
    for j in 0..n {
        if s[j] == 0.0 {
            continue;
        }
        let col = gram.values.column(j);
        let mut hj = 0.0;
        for i in 0..n {
            hj += s[i] * col[i];
        }
        quad += s[j] * hj;
    }
    linear - 0.5 * quad
}

/// Recomputes the KKT residual of a solution, independently of the solver's
/// internal bookkeeping.
///
/// The residual is the maximum violation over:
/// - box bounds `0 <= alpha <= C1`, `0 <= beta <= C2`,
/// - the equality constraint `|sum_i (alpha_i - beta_i) y_i|`,
/// - margin complementarity: interior `alpha_i` requires
///   `|y_i f(x_i) - 1| <= tol`, interior `beta_i` requires
///   `|y_i f(x_i) - (1+eps)| <= tol`,
/// - the maximal positive directional derivative of the dual objective over
///   feasible pair directions (zero at an optimum).
pub fn check_kkt(
    gram: &GramMatrix,
    labels: &[f64],
    params: &SvmMParams,
    sol: &DualSolution,
) -> Result<f64> {
    let n = labels.len();
    if sol.alpha.len() != n || sol.beta.len() != n || gram.n() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: sol.alpha.len().min(sol.beta.len()).min(gram.n()),
        });
    }
    let band = params.band_active();
    let eps_term = if band { 1.0 + params.epsilon } else { 1.0 };

    let mut residual: f64 = 0.0;

    // Box feasibility and the equality constraint.
    let mut eq = 0.0;
    for i in 0..n {
        residual = residual
            .max(-sol.alpha[i])
            .max(sol.alpha[i] - params.c1)
            .max(-sol.beta[i])
            .max(sol.beta[i] - params.c2);
        eq += (sol.alpha[i] - sol.beta[i]) * labels[i];
    }
    residual = residual.max(eq.abs());

    // Decision values on the training set: f_i = h_i + b.
    let s: Vec<f64> = (0..n)
        .map(|i| (sol.alpha[i] - sol.beta[i]) * labels[i])
        .collect();
    let h: Vec<f64> = (0..n)
        .map(|j| {
            let col = gram.values.column(j);
            (0..n).map(|i| s[i] * col[i]).sum()
        })
        .collect();

    // Complementarity for interior multipliers.
    let interior = |v: f64, ub: f64| v > 1e-9 * ub.max(1e-300) && v < ub - 1e-9 * ub;
    for i in 0..n {
        let yf = labels[i] * (h[i] + sol.bias);
        if interior(sol.alpha[i], params.c1) {
            residual = residual.max((yf - 1.0).abs());
        }
        if band && interior(sol.beta[i], params.c2) {
            residual = residual.max((yf - eps_term).abs());
        }
    }

    // Maximal ascent rate over feasible pair directions: m - M, where
    // F_p = yhat_p * dW/dv_p over the combined (alpha, beta) variables.
    let mut m_up = f64::NEG_INFINITY;
    let mut m_down = f64::INFINITY;
    let mut visit = |yhat: f64, lin: f64, v: f64, ub: f64, hi: f64| {
        let f = yhat * lin - hi;
        let up = if yhat > 0.0 { v < ub - 1e-12 * ub } else { v > 1e-12 * ub };
        let down = if yhat > 0.0 { v > 1e-12 * ub } else { v < ub - 1e-12 * ub };
        if up && f > m_up {
            m_up = f;
        }
        if down && f < m_down {
            m_down = f;
        }
    };
    for i in 0..n {
        visit(labels[i], 1.0, sol.alpha[i], params.c1, h[i]);
        if band {
            visit(-labels[i], -eps_term, sol.beta[i], params.c2, h[i]);
        }
    }
    if m_up.is_finite() && m_down.is_finite() {
        residual = residual.max(m_up - m_down);
    }
    Ok(residual.max(0.0))
}

#[cfg(test)]
mod tests;
