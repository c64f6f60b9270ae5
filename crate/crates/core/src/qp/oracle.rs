//! Brute-force verification solver: projected gradient ascent on the full
//! 2n-dimensional (alpha, beta) vector.
//!
//! Deliberately slow and deliberately written as a code path with nothing
//! in common with the SMO solver, so it can serve as an independent oracle
//! for small problems.

use super::{check_kkt, dual_objective, validate_problem, DualSolution, SolveStatus, SvmMParams};
use crate::error::{Error, Result};
use crate::kernel::GramMatrix;

const MAX_ITERS: usize = 2_000_000;
const WINDOW: usize = 100;
const WINDOW_TOL: f64 = 1e-12;

/// Solves the same dual as [`super::solve_dual`] by projected gradient
/// ascent with an exact projection onto the feasible set
/// `{0 <= alpha <= C1, 0 <= beta <= C2} intersect {sum (alpha-beta) y = 0}`.
/// Restricted to `n <= 50`.
pub fn oracle_solve(
    gram: &GramMatrix,
    labels: &[f64],
    params: &SvmMParams,
) -> Result<DualSolution> {
    params.validate()?;
    validate_problem(gram, labels)?;
    let n = labels.len();
    if n > 50 {
        return Err(Error::Solver(format!(
            "oracle_solve is limited to n <= 50, got {n}"
        )));
    }
    let band = params.band_active();
    let eps_term = 1.0 + if band { params.epsilon } else { 0.0 };
    let m = 2 * n;

    // Variable p < n is alpha_p, p >= n is beta_{p-n}. Inactive betas get a
    // zero upper bound so the projection pins them.
    let yhat: Vec<f64> = (0..m)
        .map(|p| if p < n { labels[p] } else { -labels[p - n] })
        .collect();
    let lin: Vec<f64> = (0..m)
        .map(|p| if p < n { 1.0 } else { -eps_term })
        .collect();
    let ub: Vec<f64> = (0..m)
        .map(|p| {
            if p < n {
                params.c1
            } else if band {
                params.c2
            } else {
                0.0
            }
        })
        .collect();

    let max_k = gram.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let lipschitz = (2.0 * n as f64 * max_k).max(1e-12);
    let step = 1.0 / lipschitz;

    let mut v = vec![0.0f64; m];
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIter;
    let mut u = vec![0.0f64; m];
    while iterations < MAX_ITERS {
        // Gradient of the dual objective.
        let mut s = vec![0.0f64; n];
        for p in 0..m {
            s[p % n] += yhat[p] * v[p];
        }
        for (p, up) in u.iter_mut().enumerate() {
            let i = p % n;
            let col = gram.values.column(i);
            let h_i: f64 = (0..n).map(|j| s[j] * col[j]).sum();
            let grad = lin[p] - yhat[p] * h_i;
            *up = v[p] + step * grad;
        }
        project(&mut v, &u, &yhat, &ub);
        iterations += 1;

        let obj = dual_objective(gram, labels, params, &v[..n], &v[n..]);
        history.push(obj);
        if history.len() > WINDOW && obj - history[history.len() - 1 - WINDOW] < WINDOW_TOL {
            status = SolveStatus::Converged;
            break;
        }
    }

    let alpha = v[..n].to_vec();
    let beta = v[n..].to_vec();
    let bias = oracle_bias(n, &v, &ub, &yhat, &lin, gram);
    let objective = dual_objective(gram, labels, params, &alpha, &beta);
    let mut sol = DualSolution {
        alpha,
        beta,
        bias,
        objective,
        kkt_residual: f64::NAN,
        iterations,
        status,
    };
    sol.kkt_residual = check_kkt(gram, labels, params, &sol)?;
    Ok(sol)
}

/// Exact Euclidean projection of `u` onto the box intersected with the
/// hyperplane `sum yhat_p v_p = 0`, by bisection on the multiplier of the
/// equality constraint. `phi(lambda) = sum yhat clip(u - lambda yhat)` is
/// monotonically nonincreasing in lambda.
fn project(v: &mut [f64], u: &[f64], yhat: &[f64], ub: &[f64]) {
    let phi = |lambda: f64, out: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for p in 0..u.len() {
            let x = (u[p] - lambda * yhat[p]).clamp(0.0, ub[p]);
            out[p] = x;
            total += yhat[p] * x;
        }
        total
    };
    let r = u.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
        + ub.iter().fold(0.0f64, |a, &x| a.max(x))
        + 1.0;
    let mut lo = -r;
    let mut hi = r;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if phi(mid, v) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    phi(0.5 * (lo + hi), v);
}

fn oracle_bias(
    n: usize,
    v: &[f64],
    ub: &[f64],
    yhat: &[f64],
    lin: &[f64],
    gram: &GramMatrix,
) -> f64 {
    let mut s = vec![0.0f64; n];
    for p in 0..v.len() {
        s[p % n] += yhat[p] * v[p];
    }
    let h: Vec<f64> = (0..n)
        .map(|j| {
            let col = gram.values.column(j);
            (0..n).map(|i| s[i] * col[i]).sum()
        })
        .collect();
    // Interior variables pin b = yhat*lin - h; otherwise use the feasible
    // bracket midpoint.
    let margin = |p: usize| 1e-8 * ub[p].max(1.0);
    for range in [0..n, n..v.len()] {
        let mut sum = 0.0;
        let mut count = 0;
        for p in range {
            if v[p] > margin(p) && v[p] < ub[p] - margin(p) {
                sum += yhat[p] * lin[p] - h[p % n];
                count += 1;
            }
        }
        if count > 0 {
            return sum / count as f64;
        }
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for p in 0..v.len() {
        if ub[p] == 0.0 {
            continue;
        }
        let f = yhat[p] * lin[p] - h[p % n];
        let up = if yhat[p] > 0.0 { v[p] < ub[p] - margin(p) } else { v[p] > margin(p) };
        let down = if yhat[p] > 0.0 { v[p] > margin(p) } else { v[p] < ub[p] - margin(p) };
        if up {
            lo = lo.max(f);
        }
        if down {
            hi = hi.min(f);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}
