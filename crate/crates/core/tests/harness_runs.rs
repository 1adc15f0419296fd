use seqadapt::harness::{
    evaluate_risk, run_experiment, truncation_risk, white_noise_curves, white_noise_grid, ExperimentConfig,
    ThetaFamily, ThetaSource,
};
use seqadapt::{EstimatorKind, EstimatorSpec, HyperParams, ModelSpec, RngSpec};

fn config(reps: usize, seed: u64) -> ExperimentConfig {
    let model = ModelSpec::new(1.0, 40).unwrap();
    ExperimentConfig {
        model,
        hp: HyperParams::defaults_for(&model),
        estimators: ["proposed", "mle", "truncation:5", "block_james_stein"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect(),
        theta: ThetaSource::Family(ThetaFamily::Theta3),
        b2_values: vec![1.0, 4.0],
        reps,
        rng: RngSpec::new(seed, 0),
    }
}

#[test]
fn mle_and_truncation_risk_match_closed_form() {
    let model = ModelSpec::new(0.5, 30).unwrap();
    let hp = HyperParams::defaults_for(&model);
    let b2: f64 = 2.0;
    let theta = ThetaFamily::Theta1.vector(b2.sqrt(), 30);
    let reps = 20_000;
    for (kind, want) in [
        (EstimatorKind::Mle, 30.0 * 0.5 / b2),
        (EstimatorKind::Truncation { d: 7 }, truncation_risk(&theta, 7, 0.5, b2)),
    ] {
        let est = EstimatorSpec::new(kind, hp, model).unwrap().prepare().unwrap();
        let r = evaluate_risk(&est, &theta, b2, reps, &RngSpec::new(21, 0)).unwrap();
        assert!((r.mean - want).abs() < 5.0 * r.std_error(), "{} vs {want}", r.mean);
    }
}

#[test]
fn sweep_is_deterministic_and_complete() {
    let cfg = config(50, 9);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 8);
    for row in &a.rows {
        assert_eq!(row.reps, 50);
        assert_eq!(row.seed, 9);
        assert!(row.loss_mean.is_finite() && row.loss_std >= 0.0);
    }
    let c = run_experiment(&config(50, 10)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn sweep_csv_and_json() {
    let report = run_experiment(&config(10, 1)).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("estimator,B2,loss_mean,loss_std,reps,seed"));
    assert_eq!(lines.count(), 8);
    let mut json = Vec::new();
    report.write_json(&mut json).unwrap();
    let back: seqadapt::RiskReport = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn invalid_sweeps_are_rejected() {
    let mut cfg = config(1, 1);
    assert!(run_experiment(&cfg).is_err());
    cfg.reps = 10;
    cfg.b2_values = vec![0.0];
    assert!(run_experiment(&cfg).is_err());
    cfg.b2_values = vec![1.0];
    cfg.estimators = vec![EstimatorKind::ModelAveraging { beta: 0.7 }];
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn white_noise_rendering() {
    let model = ModelSpec::new(0.01, 20).unwrap();
    let hp = HyperParams::defaults_for(&model);
    let theta = ThetaFamily::Theta4.vector(1.0, 20);
    let est = EstimatorSpec::new(EstimatorKind::Proposed, hp, model)
        .unwrap()
        .prepare()
        .unwrap();
    let grid = white_noise_grid();
    assert_eq!(grid.len(), 1000);
    let curves = white_noise_curves(&theta, &[est], &model, &grid, &RngSpec::new(2, 0)).unwrap();
    assert_eq!(curves.truth.len(), 1000);
    assert_eq!(curves.estimates[0].0, "proposed");
    let mut buf = Vec::new();
    curves.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,true,observation,proposed\n"));
    assert_eq!(text.lines().count(), 1001);
}
