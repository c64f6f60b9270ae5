use super::*;
use crate::data::Dataset;
use crate::kernel::{build_gram, GramSpec, KernelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn symmetric_pair_gram() -> (GramMatrix, Vec<f64>) {
    // x1 = +1 at (+1), x2 = -1 at (-1), raw linear kernel.
    let g = GramMatrix {
        values: DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
        spec: GramSpec::Single(KernelSpec::linear().with_normalized(false)),
        row_ids: vec![0, 1],
    };
    (g, vec![1.0, -1.0])
}

fn random_problem(seed: u64, n: usize, d: usize, spec: &KernelSpec) -> (GramMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0));
    let labels: Vec<f64> = (0..n)
        .map(|i| if i < n / 2 { 1.0 } else { -1.0 })
        .collect();
    let ds = Dataset::new(features, labels.clone(), "rand").unwrap();
    (build_gram(spec, &ds).unwrap(), labels)
}

#[test]
fn symmetric_pair_hard_margin() {
    let (g, y) = symmetric_pair_gram();
    let params = SvmMParams::standard_svm(100.0);
    let sol = solve_dual(&g, &y, &params).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.alpha[0] - 0.5).abs() < 1e-9, "alpha = {:?}", sol.alpha);
    assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
    assert_eq!(sol.beta, vec![0.0, 0.0]);
    assert!(sol.bias.abs() < 1e-9);
    // Implied w = 1, margin 1: f(x1) = sum_j delta_j y_j K_j1 + b = 1.
    let f1 = sol.alpha[0] * 1.0 + sol.alpha[1] * (-1.0) * (-1.0) + sol.bias;
    assert!((f1 - 1.0).abs() < 1e-9);
    assert!(sol.kkt_residual <= 1e-6);
}

#[test]
fn symmetric_pair_eps_zero() {
    let (g, y) = symmetric_pair_gram();
    let params = SvmMParams::new(100.0, 100.0, 0.0);
    let sol = solve_dual(&g, &y, &params).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    // Both points sit exactly on their margin hyperplanes: y f = 1, b = 0.
    let delta = sol.delta();
    let f0 = delta[0] * y[0] * 1.0 + delta[1] * y[1] * (-1.0) + sol.bias;
    let f1 = delta[0] * y[0] * (-1.0) + delta[1] * y[1] * 1.0 + sol.bias;
    assert!((y[0] * f0 - 1.0).abs() <= 1e-6);
    assert!((y[1] * f1 - 1.0).abs() <= 1e-6);
    assert!(sol.bias.abs() <= 1e-9);
}

#[test]
fn oracle_symmetric_pair_closed_form() {
    let (g, y) = symmetric_pair_gram();
    let params = SvmMParams::standard_svm(100.0);
    let sol = oracle_solve(&g, &y, &params).unwrap();
    assert!((sol.alpha[0] - 0.5).abs() < 1e-5);
    assert!((sol.alpha[1] - 0.5).abs() < 1e-5);
}

#[test]
fn oracle_box_saturation_tiny_c1() {
    let (g, y) = symmetric_pair_gram();
    let params = SvmMParams::standard_svm(1e-6);
    let sol = oracle_solve(&g, &y, &params).unwrap();
    assert!((sol.alpha[0] - 1e-6).abs() < 1e-9);
    assert!((sol.alpha[1] - 1e-6).abs() < 1e-9);
}

#[test]
fn oracle_never_below_smo_on_seeded_instances() {
    for seed in 0..10u64 {
        let (g, y) = random_problem(seed, 8, 3, &KernelSpec::gaussian(1.0));
        let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
        let smo = solve_dual(&g, &y, &params).unwrap();
        let orc = oracle_solve(&g, &y, &params).unwrap();
        assert!(
            orc.objective >= smo.objective - 1e-5 * (1.0 + smo.objective.abs()),
            "seed {seed}: oracle {} vs smo {}",
            orc.objective,
            smo.objective
        );
    }
}

#[test]
fn smo_matches_oracle_on_random_gaussian() {
    for seed in 0..20u64 {
        let (g, y) = random_problem(seed, 10, 3, &KernelSpec::gaussian(1.0));
        let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
        let smo = solve_dual(&g, &y, &params).unwrap();
        let orc = oracle_solve(&g, &y, &params).unwrap();
        let rel = (smo.objective - orc.objective).abs() / (1.0 + orc.objective.abs());
        assert!(rel <= 1e-5, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn check_kkt_accepts_converged_and_rejects_zero() {
    let (g, y) = symmetric_pair_gram();
    let params = SvmMParams::standard_svm(100.0);
    let sol = solve_dual(&g, &y, &params).unwrap();
    assert!(check_kkt(&g, &y, &params, &sol).unwrap() <= 1e-6);

    // All-zeros is feasible but not optimal: the maximal feasible ascent
    // rate at zero is 2 (F = +1 over I_up, -1 over I_down).
    let zero = DualSolution {
        alpha: vec![0.0, 0.0],
        beta: vec![0.0, 0.0],
        bias: 0.0,
        objective: 0.0,
        kkt_residual: 0.0,
        iterations: 0,
        status: SolveStatus::Converged,
    };
    let r = check_kkt(&g, &y, &params, &zero).unwrap();
    assert!(r >= 1.0, "residual at zero = {r}");
}

#[test]
fn check_kkt_detects_perturbation() {
    let (g, y) = random_problem(3, 10, 3, &KernelSpec::gaussian(1.0));
    let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
    let sol = solve_dual(&g, &y, &params).unwrap();
    assert!(sol.kkt_residual <= params.tol);
    let mut bad = sol.clone();
    // Perturb one multiplier and re-project into the box.
    bad.alpha[0] = (bad.alpha[0] + 0.1).clamp(0.0, params.c1);
    let r = check_kkt(&g, &y, &params, &bad).unwrap();
    assert!(r > params.tol, "residual after perturbation = {r}");
}

#[test]
fn dual_feasibility_on_max_iter() {
    let (g, y) = random_problem(5, 12, 3, &KernelSpec::gaussian(1.0));
    let mut params = SvmMParams::new(100.0, 100.0 / 3.0, 0.0);
    params.max_iter = 3;
    let sol = solve_dual(&g, &y, &params).unwrap();
    assert_eq!(sol.status, SolveStatus::MaxIter);
    for i in 0..12 {
        assert!(sol.alpha[i] >= 0.0 && sol.alpha[i] <= params.c1);
        assert!(sol.beta[i] >= 0.0 && sol.beta[i] <= params.c2);
    }
    let eq: f64 = sol
        .delta()
        .iter()
        .zip(&y)
        .map(|(d, yy)| d * yy)
        .sum();
    assert!(eq.abs() <= 1e-12);
}

#[test]
fn objective_monotone_in_iteration_budget() {
    let (g, y) = random_problem(7, 10, 3, &KernelSpec::polynomial(2));
    let base = SvmMParams::new(10.0, 10.0 / 3.0, 1.0);
    let mut prev = f64::NEG_INFINITY;
    for budget in 1..60 {
        let mut p = base;
        p.max_iter = budget;
        let sol = solve_dual(&g, &y, &p).unwrap();
        assert!(
            sol.objective >= prev - 1e-12,
            "objective dropped at budget {budget}: {} < {prev}",
            sol.objective
        );
        prev = sol.objective;
        if sol.status == SolveStatus::Converged {
            break;
        }
    }
}

#[test]
fn epsilon_limit_matches_standard_svm() {
    for seed in 0..10u64 {
        let (g, y) = random_problem(seed + 100, 14, 3, &KernelSpec::gaussian(1.0));
        let with_band = SvmMParams::new(10.0, 5.0, 1e6);
        let standard = SvmMParams::standard_svm(10.0);
        let a = solve_dual(&g, &y, &with_band).unwrap();
        let b = solve_dual(&g, &y, &standard).unwrap();
        let beta_max = a.beta.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        assert!(beta_max <= with_band.tol);
        for i in 0..14 {
            assert!(
                (a.alpha[i] - b.alpha[i]).abs() <= 1e-6,
                "seed {seed} i {i}: {} vs {}",
                a.alpha[i],
                b.alpha[i]
            );
        }
    }
}

#[test]
fn scale_covariance_sign_pattern() {
    // Separable toy instance; scaling the Gram by c and the penalties by
    // 1/c preserves the decision sign pattern.
    let (g, y) = random_problem(42, 10, 2, &KernelSpec::linear().with_normalized(false));
    let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
    let sol = solve_dual(&g, &y, &params).unwrap();
    let c = 4.0;
    let g2 = GramMatrix {
        values: &g.values * c,
        spec: g.spec.clone(),
        row_ids: g.row_ids.clone(),
    };
    let params2 = SvmMParams::new(params.c1 / c, params.c2 / c, 3.0);
    let sol2 = solve_dual(&g2, &y, &params2).unwrap();
    let f = |gm: &GramMatrix, s: &DualSolution| -> Vec<f64> {
        let delta = s.delta();
        (0..10)
            .map(|i| {
                (0..10)
                    .map(|j| delta[j] * y[j] * gm.values[(j, i)])
                    .sum::<f64>()
                    + s.bias
            })
            .collect()
    };
    let fa = f(&g, &sol);
    let fb = f(&g2, &sol2);
    for i in 0..10 {
        if fa[i].abs() > 1e-6 && fb[i].abs() > 1e-6 {
            assert_eq!(fa[i] > 0.0, fb[i] > 0.0, "sign flip at {i}");
        }
    }
}

#[test]
fn duplicate_point_terminates_with_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut features = DMatrix::from_fn(9, 3, |_, _| rng.random_range(-2.0..2.0));
    // Duplicate instance 0 into row 8, same label.
    for j in 0..3 {
        features[(8, j)] = features[(0, j)];
    }
    let labels = vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0];
    let ds = Dataset::new(features, labels.clone(), "dup").unwrap();
    let g = build_gram(&KernelSpec::gaussian(1.0), &ds).unwrap();
    let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
    let sol = solve_dual(&g, &labels, &params).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!(sol.kkt_residual <= params.tol);
}

#[test]
fn mutually_exclusive_interior_multipliers() {
    for seed in 0..10u64 {
        let (g, y) = random_problem(seed + 40, 12, 3, &KernelSpec::gaussian(1.0));
        let params = SvmMParams::new(10.0, 10.0 / 3.0, 1.0);
        let sol = solve_dual(&g, &y, &params).unwrap();
        if sol.status != SolveStatus::Converged {
            continue;
        }
        for i in 0..12 {
            let a_int = sol.alpha[i] > 1e-8 && sol.alpha[i] < params.c1 - 1e-8;
            let b_int = sol.beta[i] > 1e-8 && sol.beta[i] < params.c2 - 1e-8;
            assert!(!(a_int && b_int), "seed {seed}: both interior at {i}");
        }
    }
}

#[test]
fn single_class_rejected() {
    let (g, _) = symmetric_pair_gram();
    let y = vec![1.0, 1.0];
    assert!(solve_dual(&g, &y, &SvmMParams::standard_svm(1.0)).is_err());
}

#[test]
fn oracle_rejects_large_problems() {
    let (g, y) = random_problem(0, 51, 2, &KernelSpec::linear());
    assert!(oracle_solve(&g, &y, &SvmMParams::standard_svm(1.0)).is_err());
}
