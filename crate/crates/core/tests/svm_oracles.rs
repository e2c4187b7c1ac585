mod common;

use common::*;
use ocx::{train, train_with_options, Decision, KernelSpec, Matrix, OneClassModel, TrainOptions};
use serde_json::Value;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!(
        "{}/tests/fixtures/{name}",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap()
}

#[test]
fn discriminant_matches_high_precision_resummation() {
    let cases: Vec<Value> = serde_json::from_str(&fixture("discriminant.json")).unwrap();
    let mut checked = 0;
    for case in &cases {
        if let Some(c) = case.get("constant") {
            assert_eq!(c, "exp(-1/2)");
            let want: f64 = case["value"].as_str().unwrap().parse().unwrap();
            let got = ocx::eval_kernel(&KernelSpec::gaussian(1.0), 1.0).unwrap();
            assert!(rel_err(got, want) <= 1e-15, "{got} vs {want}");
            continue;
        }
        let kernel: KernelSpec = serde_json::from_value(case["kernel"].clone()).unwrap();
        let alphas: Vec<f64> = serde_json::from_value(case["alphas"].clone()).unwrap();
        let svs: Vec<Vec<f64>> = serde_json::from_value(case["support_vectors"].clone()).unwrap();
        let x: Vec<f64> = serde_json::from_value(case["x"].clone()).unwrap();
        let want: f64 = case["g"].as_str().unwrap().parse().unwrap();
        let model =
            OneClassModel::from_parts(Matrix::from_rows(&svs).unwrap(), alphas, kernel, 0.5, 0.0)
                .unwrap();
        let got = model.discriminant(&x).unwrap();
        assert!(rel_err(got, want) <= 1e-12, "{got} vs {want}");
        assert_eq!(ocx::inlierness(&model, &x).unwrap(), got);
        checked += 1;
    }
    assert_eq!(checked, 12);
}

#[test]
fn dimension_mismatch_is_a_shape_error() {
    let mut r = rng(1);
    let model = random_model(&mut r, KernelSpec::gaussian(1.0), 3, 4);
    assert!(matches!(
        model.discriminant(&[0.0; 3]),
        Err(ocx::OcxError::Shape(_))
    ));
}

#[test]
fn far_points_are_outliers() {
    let data =
        Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]]).unwrap();
    let model = train(&data, KernelSpec::gaussian(1.0), 0.5, 1e-9, 100_000).unwrap();
    assert_eq!(model.decide(&[1e3, -1e3]).unwrap(), Decision::Outlier);
    assert_eq!(model.decide(&[0.5, 0.5]).unwrap(), Decision::Inlier);
}

#[test]
fn nu_property_on_blob() {
    for seed in 0..3 {
        let data = ocx::synth::gaussian_blob(500, 2, seed);
        let (model, report) = train_with_options(
            &data,
            KernelSpec::gaussian(1.0),
            0.1,
            &TrainOptions::default(),
        )
        .unwrap();
        let out = data
            .iter_rows()
            .filter(|x| model.decide(x).unwrap() == Decision::Outlier)
            .count() as f64
            / 500.0;
        assert!(
            (0.05..=0.15).contains(&out),
            "seed {seed}: outlier fraction {out}"
        );
        // fraction of support vectors is at least nu, fraction at the bound at most nu
        assert!(model.m() as f64 / 500.0 >= 0.1 - 1e-9);
        assert!(report.n_at_bound as f64 / 500.0 <= 0.1 + 1e-9);
        assert!(report.kkt_residual <= 1e-6);
    }
}

#[test]
fn feasibility_after_training() {
    let mut r = rng(9);
    for &(nu, spec) in &[
        (0.05, KernelSpec::laplacian(0.7)),
        (0.3, KernelSpec::t_student(2.0, 1.0)),
        (1.0, KernelSpec::Exponential { q: 4.0, sigma: 1.5 }),
    ] {
        let rows: Vec<Vec<f64>> = (0..120).map(|_| normal_vec(&mut r, 3)).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let model = train(&data, spec, nu, 1e-8, 1_000_000).unwrap();
        let total: f64 = model.alphas.iter().sum();
        assert!((total - 1.0).abs() <= 1e-10);
        let bound = 1.0 / (nu * 120.0);
        assert!(model
            .alphas
            .iter()
            .all(|&a| a > 0.0 && a <= bound * (1.0 + 1e-9) + 1e-12));
    }
}
