use super::*;
use crate::data::Dataset;
use crate::kernel::KernelSpec;
use crate::qp::SvmMParams;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn blobs(n_per_class: usize, d: usize, sep: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * n_per_class;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i < n_per_class { 1.0 } else { -1.0 };
        for j in 0..d {
            let center = if j == 0 { y * sep } else { 0.0 };
            features[(i, j)] = center + rng.random_range(-1.0..1.0);
        }
        labels.push(y);
    }
    Dataset::new(features, labels, "blobs").unwrap()
}

fn accuracy(model: &TrainedModel, data: &Dataset) -> f64 {
    let mut hits = 0;
    for i in 0..data.n() {
        let x: Vec<f64> = data.features.row(i).iter().copied().collect();
        if model.predict(&x).unwrap() == data.labels[i] {
            hits += 1;
        }
    }
    hits as f64 / data.n() as f64
}

#[test]
fn scatter_matches_double_loop_oracle() {
    let data = blobs(15, 4, 1.0, 7);
    let stats = compute_scatter(&data).unwrap();
    // Brute-force S_W entry by entry.
    let (pos, neg) = data.class_indices();
    let d = data.dim();
    for a in 0..d {
        for b in 0..d {
            let mut sw = 0.0;
            for (ix, m) in [(&pos, &stats.m1), (&neg, &stats.m2)] {
                for &i in ix.iter() {
                    sw += (data.features[(i, a)] - m[a]) * (data.features[(i, b)] - m[b]);
                }
            }
            assert!((stats.s_w[(a, b)] - sw).abs() < 1e-9);
            let st = stats.s_w[(a, b)] + stats.s_b[(a, b)];
            assert!((stats.s_t[(a, b)] - st).abs() < 1e-12);
        }
    }
}

#[test]
fn fda_separates_gaussian_blobs() {
    let data = blobs(40, 3, 4.0, 11);
    let model = train_fda(&data).unwrap();
    assert_eq!(model.kind, ModelKind::Fda);
    assert!(accuracy(&model, &data) > 0.99);
    // Direction should be dominated by the separating coordinate.
    let w = model.fda_direction.as_ref().unwrap();
    assert!(w[0].abs() > w[1].abs());
    assert!(w[0].abs() > w[2].abs());
}

#[test]
fn svm_trains_and_separates() {
    let data = blobs(25, 2, 3.0, 3);
    let kernel = KernelSpec::linear().with_normalized(false);
    let params = SvmMParams::standard_svm(10.0);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::Svm).unwrap();
    assert_eq!(accuracy(&model, &data), 1.0);
    let diag = model.diagnostics.as_ref().unwrap();
    assert!(diag.kkt_residual < 1e-5);
}

#[test]
fn gaussian_kernel_model_separates_xor() {
    // Linearly inseparable parity data.
    let features = DMatrix::from_row_slice(8, 2, &[
        1.0, 1.0, -1.0, -1.0, 1.1, 0.9, -0.9, -1.1, // class +1
        1.0, -1.0, -1.0, 1.0, 0.9, -1.1, -1.0, 1.1, // class -1
    ]);
    let labels = vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    let data = Dataset::new(features, labels, "xor").unwrap();
    let kernel = KernelSpec::gaussian(1.0);
    let params = SvmMParams::standard_svm(100.0);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::Svm).unwrap();
    assert_eq!(accuracy(&model, &data), 1.0);
}

#[test]
fn svm_fda_lambda_zero_matches_plain_linear_svm() {
    let data = blobs(20, 3, 2.0, 5);
    let params = SvmMParams::standard_svm(1.0);
    let plain = train_svm_family(
        &data,
        &KernelSpec::linear().with_normalized(false),
        &params,
        ModelKind::Svm,
    )
    .unwrap();
    let whitened = train_svm_fda(&data, &params, 0.0).unwrap();
    // lambda = 0 means M = I, so decision values coincide.
    for i in 0..data.n() {
        let x: Vec<f64> = data.features.row(i).iter().copied().collect();
        let a = plain.decision_value(&x).unwrap();
        let b = whitened.decision_value(&x).unwrap();
        assert!((a - b).abs() < 1e-6, "instance {i}: {a} vs {b}");
    }
}

#[test]
fn svm_fda_norm_identity_holds() {
    // w' M w computed in the original space equals |w~|^2 in the whitened
    // space, which is what weight_norm_sq reports for the trained model.
    let data = blobs(20, 3, 2.0, 9);
    let params = SvmMParams::standard_svm(10.0);
    let lambda = 0.7;
    let model = train_svm_fda(&data, &params, lambda).unwrap();
    let norm_sq = model.weight_norm_sq().unwrap();

    let w = model.linear_weights().unwrap(); // original space
    let stats = compute_scatter(&data).unwrap();
    let d = data.dim();
    let m = &stats.s_w * lambda + DMatrix::identity(d, d);
    let wv = DVector::from_column_slice(&w);
    let quad = (&m * &wv).dot(&wv);
    assert!(
        (quad - norm_sq).abs() < 1e-8 * norm_sq.max(1.0),
        "w'Mw = {quad}, |w~|^2 = {norm_sq}"
    );
}

#[test]
fn band_constraint_bounds_within_band_distance() {
    // For the band-constrained machine, instances with beta_i > 0 sit at
    // distance at most epsilon * gamma beyond the margin hyperplane.
    let data = blobs(30, 2, 3.0, 13);
    let epsilon = 3.0;
    let params = SvmMParams::new(10.0, 10.0 / 3.0, epsilon);
    let kernel = KernelSpec::linear().with_normalized(false);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::SvmM).unwrap();
    let report = distance_report(&model, &data, 1.0).unwrap();
    let gamma = report.margin;
    let (p, n) = report.d_w2_per_class;
    assert!(p / gamma <= epsilon + 1e-4, "pos band {} gamma {}", p, gamma);
    assert!(n / gamma <= epsilon + 1e-4, "neg band {} gamma {}", n, gamma);
}

#[test]
fn distance_report_clips_inside_margin_to_zero() {
    // Two points exactly on their margin hyperplanes: all within-band
    // distances are zero and the margin matches the closed form.
    let features = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    let data = Dataset::new(features, vec![1.0, -1.0], "pair").unwrap();
    let params = SvmMParams::standard_svm(10.0);
    let kernel = KernelSpec::linear().with_normalized(false);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::Svm).unwrap();
    let report = distance_report(&model, &data, 1.0).unwrap();
    assert!((report.margin - 1.0).abs() < 1e-6);
    assert!(report.d_w1_per_class.0.abs() < 1e-9);
    assert!(report.d_w1_per_class.1.abs() < 1e-9);
    assert!(report.d_w2_per_class.0.abs() < 1e-9);
    assert!(report.d_w2_per_class.1.abs() < 1e-9);
    assert!((report.d_b - 2.0).abs() < 1e-6);
}

#[test]
fn d_w3_reported_for_linear_only() {
    let data = blobs(10, 2, 3.0, 17);
    let params = SvmMParams::standard_svm(1.0);
    let lin = train_svm_family(
        &data,
        &KernelSpec::linear().with_normalized(false),
        &params,
        ModelKind::Svm,
    )
    .unwrap();
    assert!(distance_report(&lin, &data, 1.0).unwrap().d_w3.is_some());
    let gauss =
        train_svm_family(&data, &KernelSpec::gaussian(1.0), &params, ModelKind::Svm).unwrap();
    assert!(distance_report(&gauss, &data, 1.0).unwrap().d_w3.is_none());
}

#[test]
fn prediction_uses_kernel_normalization() {
    // With a normalized kernel, training-set decision values from the
    // model must reproduce Gram-based values K_ij / sqrt(K_ii K_jj).
    let data = blobs(10, 3, 2.0, 21);
    let kernel = KernelSpec::gaussian(2.0); // normalized by default
    let params = SvmMParams::standard_svm(5.0);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::Svm).unwrap();
    let gram = build_gram(&kernel, &data).unwrap();
    let delta_terms: Vec<(usize, f64)> = {
        // Recover per-instance coefficients by matching support vectors to
        // dataset rows.
        model
            .support
            .iter()
            .map(|t| {
                let row = (0..data.n())
                    .find(|&i| {
                        data.features
                            .row(i)
                            .iter()
                            .zip(&t.x)
                            .all(|(a, b)| (a - b).abs() < 1e-12)
                    })
                    .unwrap();
                (row, t.c)
            })
            .collect()
    };
    for j in 0..data.n() {
        let x: Vec<f64> = data.features.row(j).iter().copied().collect();
        let from_model = model.decision_value(&x).unwrap();
        let from_gram: f64 = delta_terms
            .iter()
            .map(|&(i, c)| c * gram.values[(i, j)])
            .sum::<f64>()
            + model.bias;
        assert!((from_model - from_gram).abs() < 1e-9);
    }
}

#[test]
fn zero_decision_value_predicts_positive() {
    let model = TrainedModel {
        version: 1,
        kind: ModelKind::Svm,
        kernel: ModelKernel::Single(KernelSpec::linear().with_normalized(false)),
        support: vec![SupportTerm { x: vec![1.0], c: 1.0 }],
        bias: -1.0,
        transform: None,
        fda_direction: None,
        standardizer: None,
        diagnostics: None,
    };
    // f(1.0) = 1*1 - 1 = 0 exactly.
    assert_eq!(model.predict(&[1.0]).unwrap(), 1.0);
    assert_eq!(model.predict(&[0.999]).unwrap(), -1.0);
}

#[test]
fn model_json_round_trip() {
    let data = blobs(8, 2, 3.0, 29);
    let params = SvmMParams::new(10.0, 10.0 / 3.0, 3.0);
    let kernel = KernelSpec::polynomial(2);
    let model = train_svm_family(&data, &kernel, &params, ModelKind::SvmM).unwrap();
    let json = model.to_json().unwrap();
    let back = TrainedModel::from_json(&json).unwrap();
    assert_eq!(model, back);
    let x: Vec<f64> = data.features.row(0).iter().copied().collect();
    assert_eq!(
        model.decision_value(&x).unwrap(),
        back.decision_value(&x).unwrap()
    );
}

#[test]
fn embedded_standardizer_applies_before_kernel() {
    let data = blobs(10, 2, 3.0, 33);
    let standardizer = crate::data::fit_standardizer(&data);
    let std_data = crate::data::apply_standardizer(&standardizer, &data).unwrap();
    let params = SvmMParams::standard_svm(10.0);
    let kernel = KernelSpec::linear().with_normalized(false);
    let mut model = train_svm_family(&std_data, &kernel, &params, ModelKind::Svm).unwrap();
    model.standardizer = Some(standardizer);
    // Feeding raw rows into the standardizer-equipped model matches feeding
    // standardized rows into the bare expansion.
    let bare = TrainedModel {
        standardizer: None,
        ..model.clone()
    };
    for i in 0..data.n() {
        let raw: Vec<f64> = data.features.row(i).iter().copied().collect();
        let std_row: Vec<f64> = std_data.features.row(i).iter().copied().collect();
        let a = model.decision_value(&raw).unwrap();
        let b = bare.decision_value(&std_row).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn l_mu_norm_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let d = rng.random_range(1..6);
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..3.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        for p in [1, 2] {
            let na = l_mu_norm(&a, &mu, p).unwrap();
            let nb = l_mu_norm(&b, &mu, p).unwrap();
            let ns = l_mu_norm(&sum, &mu, p).unwrap();
            assert!(ns <= na + nb + 1e-12);
        }
    }
}

#[test]
fn l_mu_norm_rejects_bad_input() {
    assert!(l_mu_norm(&[1.0], &[1.0, 2.0], 2).is_err());
    assert!(l_mu_norm(&[1.0], &[0.0], 2).is_err());
    assert!(l_mu_norm(&[1.0], &[1.0], 3).is_err());
}

#[test]
fn cost_functions_evaluate() {
    let (d_b, d_w, lambda) = (2.0, 0.5, 0.25);
    assert!((cost_f1(d_b, d_w) - 4.0).abs() < 1e-12);
    assert!((cost_f2(d_b, d_w, lambda) - 2.5).abs() < 1e-12);
    assert!((cost_f3(d_b, d_w, lambda) - 1.875).abs() < 1e-12);
    assert!((cost_f4(d_b, d_w, lambda) - 0.625).abs() < 1e-12);
}

#[test]
fn train_svm_family_rejects_single_class() {
    let features = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
    let data = Dataset::new(features, vec![1.0, 1.0, 1.0], "one").unwrap();
    let err = train_svm_family(
        &data,
        &KernelSpec::linear(),
        &SvmMParams::standard_svm(1.0),
        ModelKind::Svm,
    );
    assert!(err.is_err());
}
