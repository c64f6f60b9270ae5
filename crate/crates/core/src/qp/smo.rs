//! SMO-style pairwise coordinate ascent on the combined (alpha, beta)
//! variable vector.
//!
//! Each combined variable carries an effective label: `y_i` for `alpha_i`
//! and `-y_i` for `beta_i`. Under that relabeling the dual is a standard
//! box-and-equality QP, so classic SMO working-set selection applies: the
//! first variable is the maximal violator over the up-feasible set, the
//! second is chosen by the second-order (maximum gain) rule over the
//! down-feasible violators; the two-variable subproblem is solved in
//! closed form and clipped to the boxes. Convergence is still certified by
//! the maximal-violating-pair gap. Ties break toward the lowest index,
//! which makes the solve deterministic.

use super::{check_kkt, validate_problem, DualSolution, SolveStatus, SvmMParams};
use crate::error::Result;
use crate::kernel::GramMatrix;

/// Solves the band-constrained SVM dual. Returns a feasible solution even
/// when the pair-update budget is exhausted (`status = MaxIter`).
pub fn solve_dual(
    gram: &GramMatrix,
    labels: &[f64],
    params: &SvmMParams,
) -> Result<DualSolution> {
    params.validate()?;
    validate_problem(gram, labels)?;

    let n = labels.len();
    let band = params.band_active();
    // At epsilon = 0 the objective depends on alpha and beta only through
    // delta = alpha - beta, so the (alpha, beta) split is degenerate and
    // slows pair selection badly. Solve directly in delta with the
    // asymmetric box [-C2, C1] instead.
    let eps0 = band && params.epsilon == 0.0;
    let split = band && !eps0;
    let m = if split { 2 * n } else { n };
    let eps_term = 1.0 + if split { params.epsilon } else { 0.0 };

    // Combined variable layout: p < n is alpha_{p} (or delta_{p} in the
    // eps0 case), p >= n is beta_{p-n}.
    let idx = |p: usize| if p < n { p } else { p - n };
    let yhat: Vec<f64> = (0..m)
        .map(|p| if p < n { labels[p] } else { -labels[p - n] })
        .collect();
    // F_p = yhat_p * lin_p - h_{i(p)}; precompute the constant part.
    let flin: Vec<f64> = (0..m)
        .map(|p| {
            if p < n {
                yhat[p] // yhat * 1
            } else {
                -yhat[p] * eps_term
            }
        })
        .collect();
    let lb: Vec<f64> = (0..m).map(|_| if eps0 { -params.c2 } else { 0.0 }).collect();
    let ub: Vec<f64> = (0..m)
        .map(|p| if p < n { params.c1 } else { params.c2 })
        .collect();

    let mut v = vec![0.0f64; m];
    // h[j] = sum_i (alpha_i - beta_i) y_i K_ij, maintained incrementally.
    let mut h = vec![0.0f64; n];
    let k = &gram.values;

    let mut iterations = 0usize;
    let status;
    loop {
        // First variable: maximal violator over the up-feasible set; the
        // minimal down-feasible value certifies convergence. Strict
        // comparisons keep the lowest index among ties.
        let mut up_val = f64::NEG_INFINITY;
        let mut up_ix = usize::MAX;
        let mut down_val = f64::INFINITY;
        let mut down_ix = usize::MAX;
        for p in 0..m {
            let f = flin[p] - h[idx(p)];
            if yhat[p] > 0.0 {
                if v[p] < ub[p] && f > up_val {
                    up_val = f;
                    up_ix = p;
                }
                if v[p] > lb[p] && f < down_val {
                    down_val = f;
                    down_ix = p;
                }
            } else {
                if v[p] > lb[p] && f > up_val {
                    up_val = f;
                    up_ix = p;
                }
                if v[p] < ub[p] && f < down_val {
                    down_val = f;
                    down_ix = p;
                }
            }
        }
        if up_ix == usize::MAX || down_ix == usize::MAX || up_val - down_val <= params.tol {
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= params.max_iter {
            status = SolveStatus::MaxIter;
            break;
        }

        // Second variable: maximum-gain rule (second-order selection) over
        // the down-feasible violators, falling back to the maximal violator
        // when no positive-curvature partner exists.
        let p = up_ix;
        let ip = idx(p);
        let kpp = k[(ip, ip)];
        let mut best_gain = f64::NEG_INFINITY;
        let mut q = down_ix;
        for cand in 0..m {
            let down_ok = if yhat[cand] > 0.0 {
                v[cand] > lb[cand]
            } else {
                v[cand] < ub[cand]
            };
            if !down_ok {
                continue;
            }
            let f = flin[cand] - h[idx(cand)];
            let d = up_val - f;
            if d <= 0.0 {
                continue;
            }
            let ic = idx(cand);
            let mut eta = kpp + k[(ic, ic)] - 2.0 * k[(ip, ic)];
            if eta <= 0.0 {
                eta = 1e-12;
            }
            let gain = d * d / eta;
            if gain > best_gain {
                best_gain = gain;
                q = cand;
            }
        }
        let iq = idx(q);
        let f_q = flin[q] - h[iq];
        // Curvature of the two-variable subproblem; a duplicated instance
        // can make it zero, in which case a small ridge keeps the step
        // finite.
        let mut eta = k[(ip, ip)] + k[(iq, iq)] - 2.0 * k[(ip, iq)];
        if eta <= 0.0 {
            eta = 1e-12;
        }
        let mut t = (up_val - f_q) / eta;
        let room_p = if yhat[p] > 0.0 { ub[p] - v[p] } else { v[p] - lb[p] };
        let room_q = if yhat[q] > 0.0 { v[q] - lb[q] } else { ub[q] - v[q] };
        t = t.min(room_p).min(room_q);

        v[p] += yhat[p] * t;
        v[q] -= yhat[q] * t;
        snap(&mut v[p], lb[p], ub[p]);
        snap(&mut v[q], lb[q], ub[q]);

        if ip != iq {
            let col_p = k.column(ip);
            let col_q = k.column(iq);
            for j in 0..n {
                h[j] += t * (col_p[j] - col_q[j]);
            }
        }
        iterations += 1;
    }

    let (alpha, beta): (Vec<f64>, Vec<f64>) = if eps0 {
        // v holds delta; recover the canonical minimal-norm split.
        (0..n).map(|i| (v[i].max(0.0), (-v[i]).max(0.0))).unzip()
    } else if split {
        (v[..n].to_vec(), v[n..].to_vec())
    } else {
        (v[..n].to_vec(), vec![0.0; n])
    };

    let bias = recover_bias(n, m, &v, &lb, &ub, &yhat, &flin, &h, idx);

    let mut objective = 0.0;
    for p in 0..m {
        objective += if p < n { v[p] } else { -eps_term * v[p] };
    }
    let mut quad = 0.0;
    for j in 0..n {
        let s_j = (alpha[j] - beta[j]) * labels[j];
        quad += s_j * h[j];
    }
    objective -= 0.5 * quad;

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

fn snap(v: &mut f64, lb: f64, ub: f64) {
    let tol = 1e-12 * ub.max(-lb).max(1.0);
    if *v < lb + tol {
        *v = lb;
    } else if *v > ub - tol {
        *v = ub;
    } else if v.abs() < tol {
        *v = 0.0;
    }
}

/// Bias recovery per the KKT conditions: every combined variable wants
/// `b = F_p` when interior; bound-saturated variables contribute one-sided
/// bounds (`b >= F` over the up-feasible set, `b <= F` over the
/// down-feasible set).
#[allow(clippy::too_many_arguments)]
fn recover_bias(
    n: usize,
    m: usize,
    v: &[f64],
    lb: &[f64],
    ub: &[f64],
    yhat: &[f64],
    flin: &[f64],
    h: &[f64],
    idx: impl Fn(usize) -> usize,
) -> f64 {
    let free = |p: usize| v[p] > lb[p] && v[p] < ub[p];
    // Mean target over free alpha support vectors, then free beta vectors.
    for range in [0..n, n..m] {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in range {
            if free(p) {
                sum += flin[p] - h[idx(p)];
                count += 1;
            }
        }
        if count > 0 {
            return sum / count as f64;
        }
    }
    // No free vectors: midpoint of the KKT-feasible bracket.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for p in 0..m {
        let f = flin[p] - h[idx(p)];
        let up = if yhat[p] > 0.0 { v[p] < ub[p] } else { v[p] > lb[p] };
        let down = if yhat[p] > 0.0 { v[p] > lb[p] } else { v[p] < ub[p] };
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
