use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seqadapt_cli::{parse_config, run_cli};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_seqadapt"));
    c.env_remove("SEQADAPT_THREADS");
    c
}

fn run_in(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.current_dir(dir).args(args);
    if let Some(t) = threads {
        c.env("SEQADAPT_THREADS", t);
    }
    c.output().unwrap()
}

const SWEEP: &str = r#"{
  "p": 100,
  "eps2": 1,
  "theta_family": 1,
  "B2": [1, 2, 3, 4, 5],
  "eta": 2,
  "gamma": 2,
  "beta": 0.5,
  "estimators": ["proposed", "model_selection", "model_averaging"],
  "reps": 30,
  "seed": 4
}"#;

#[test]
fn risk_sweep_emits_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sweep.json"), SWEEP).unwrap();
    let out = run_in(
        dir.path(),
        &["risk-sweep", "--config", "sweep.json", "--out", "r.csv"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "estimator,B2,loss_mean,loss_std,reps,seed");
    assert_eq!(lines.len(), 16);
    assert!(lines[1].starts_with("proposed,1"));
    assert!(lines[3].starts_with("model_averaging:0.5,1"));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sweep.json"), SWEEP).unwrap();
    let args = ["risk-sweep", "--config", "sweep.json"];
    let a = run_in(dir.path(), &args, Some("1"));
    let b = run_in(dir.path(), &args, Some("4"));
    let c = run_in(dir.path(), &args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let d = run_in(
        dir.path(),
        &["risk-sweep", "--config", "sweep.json", "--seed", "5"],
        None,
    );
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn whitenoise_grid_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "whitenoise",
            "--set",
            "p=100",
            "--set",
            "eps2=1",
            "--set",
            "theta_family=3",
            "--set",
            "B2=100",
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "t,true,observation,proposed,model_selection,model_averaging:0.5"
    );
    assert_eq!(lines.len(), 1001);
    assert!(lines[1].starts_with("0.001,"));
    assert!(lines[1000].starts_with("1,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run_in(p, &["bogus"], None).status.code(), Some(2));
    assert_eq!(run_in(p, &[], None).status.code(), Some(2));
    let base = [
        "risk-sweep",
        "--set",
        "p=10",
        "--set",
        "eps2=1",
        "--set",
        "theta_family=2",
        "--set",
        "B2=1",
    ];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        run_in(p, &v, None).status.code()
    };
    assert_eq!(with(&["--reps", "5"]), Some(0));
    assert_eq!(with(&["--set", "beta=0.7"]), Some(2));
    assert_eq!(with(&["--reps", "0"]), Some(2));
    assert_eq!(with(&["--set", "unknown=1"]), Some(2));
    assert_eq!(with(&["--set", "strict_tail_mass=true", "--reps", "5"]), Some(3));
    assert_eq!(
        run_in(p, &["simulate", "--config", "missing.json"], None).status.code(),
        Some(1)
    );
    let out = run_in(p, &["risk-sweep", "--set", "eps2=1"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`p`"));
    assert_eq!(
        run_in(
            p,
            &[
                "simulate",
                "--set",
                "p=3",
                "--set",
                "eps2=1",
                "--set",
                "theta_family=1",
                "--set",
                "B2=1"
            ],
            Some("0")
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn regression_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let n = 200;
    let mut data = String::from("t,y\n");
    for k in 1..=n {
        let t = k as f64 / n as f64;
        let y = 1.0 + (2.0 * std::f64::consts::PI * t).cos() + 0.1 * ((k * 7919) % 13) as f64 / 13.0;
        data.push_str(&format!("{t},{y}\n"));
    }
    fs::write(dir.path().join("sample.csv"), data).unwrap();
    fs::write(dir.path().join("reg.json"), r#"{"p": 20, "data": "sample.csv"}"#).unwrap();
    let out = run_in(dir.path(), &["regression", "--config", "reg.json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,fhat");
    assert_eq!(lines.len(), 1001);

    let out = run_in(dir.path(), &["regression", "--config", "reg.json", "--json"], None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 200);
    assert_eq!(v["coefs"].as_array().unwrap().len(), 20);
}

#[test]
fn estimate_and_posterior_with_given_observation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"p": 4, "eps2": 1, "x": [3, -1, 0.5, 0], "estimators": ["mle", "truncation:2"]}"#;
    fs::write(dir.path().join("e.json"), cfg).unwrap();
    let out = run_in(dir.path(), &["estimate", "--config", "e.json"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "i,x,mle,truncation:2\n1,3,3,3\n2,-1,-1,-1\n3,0.5,0.5,0\n4,0,0,0\n"
    );

    let out = run_in(
        dir.path(),
        &["posterior", "--config", "e.json", "--set", "draws=3"],
        None,
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("i,x,mean,draw_1,draw_2,draw_3\n"));
    assert_eq!(text.lines().count(), 5);

    let out = run_in(dir.path(), &["posterior", "--config", "e.json", "--json"], None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let lf: f64 = v["log_f_post"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l.as_f64().unwrap().exp())
        .sum();
    assert!((lf - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_small_ball_and_in_process_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.csv");
    let code = run_cli([
        "seqadapt",
        "simulate",
        "--set",
        "p=5",
        "--set",
        "eps2=0.5",
        "--set",
        "theta_family=2",
        "--set",
        "B2=4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("i,theta,x\n1,2,"));
    assert_eq!(text.lines().count(), 6);

    let out = run_in(
        dir.path(),
        &[
            "small-ball",
            "--set",
            "alpha=1",
            "--set",
            "d=1",
            "--reps",
            "20000",
            "--json",
        ],
        None,
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["result"]["probability"].as_f64().unwrap();
    assert!((p - 0.6827).abs() < 0.02);

    assert_eq!(run_cli(["seqadapt", "estimate", "--set", "p=2", "--set", "eps2=1"]), 2);
}

#[test]
fn parse_config_minimal() {
    let cfg = parse_config(r#"{"p": 100, "eps2": 1, "theta_family": 2, "B2": [1, 2, 3, 4, 5]}"#).unwrap();
    assert_eq!(cfg.model.p, 100);
    assert_eq!(cfg.reps, 1000);
}
