mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{logistic_table, to_csv};

fn awdpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awdpd")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_train(dir: &Path) -> String {
    let p = dir.join("train.csv");
    std::fs::write(&p, to_csv(&logistic_table(80, &[2.0, 0.0, -1.5, 0.0], 21))).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fit_is_deterministic_and_evaluable() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_train(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = awdpd(&["fit", "--data", &train, "--lambda-grid", "20,1e-2", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["model"]["schema"], "awdpd-model/1");
    assert_eq!(v["stages"].as_array().unwrap().len(), 2);
    assert_eq!(v["stages"][1]["lambdas"].as_array().unwrap().len(), 20);

    let o = awdpd(&["eval", "--model", a.to_str().unwrap(), "--data", &train]);
    assert_eq!(code(&o), 0);
    let e: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(e["accuracy"].as_f64().unwrap() > 0.6);
}

#[test]
fn path_reports_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_train(dir.path());
    let o = awdpd(&["path", "--data", &train, "--scheme", "lasso", "--lambda-grid", "8,1e-2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pts = v["stages"][0]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 8);
    assert!(pts.iter().all(|p| !p["fit"]["objective_trace"].as_array().unwrap().is_empty()));
}

#[test]
fn influence_curve_csv() {
    let o = awdpd(&["influence", "--alpha", "0.5", "--beta", "3,2", "--t-min", "-10", "--t-max", "10", "--t-points", "5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,if_norm");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("-1.0000000000000000e1,"));
}

#[test]
fn simulate_table_is_reproducible() {
    let run = || awdpd(&["simulate", "--n", "40", "--k", "6", "--reps", "2", "--contamination", "labels", "--eps", "0.1", "--seed", "5"]);
    let a = run();
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run().stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("method,MS,TP,TN,MSES,MAE,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_train(dir.path());
    assert_eq!(code(&awdpd(&["--help"])), 0);
    assert_eq!(code(&awdpd(&["--version"])), 0);
    assert_eq!(code(&awdpd(&["frobnicate"])), 1);
    assert_eq!(code(&awdpd(&["fit", "--data", "/no/such/file.csv"])), 1);
    assert_eq!(code(&awdpd(&["fit", "--data", &train, "--alpha", "-1"])), 1);
    assert_eq!(code(&awdpd(&["fit", "--data", &train, "--corr-threshold", "1.5"])), 1);
    assert_eq!(code(&awdpd(&["simulate", "--eps", "0.1"])), 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,a\n0,1\n2,3\n").unwrap();
    assert_eq!(code(&awdpd(&["fit", "--data", bad.to_str().unwrap()])), 2);
    let text = dir.path().join("text.csv");
    std::fs::write(&text, "y,a\n0,1\n1,abc\n").unwrap();
    assert_eq!(code(&awdpd(&["fit", "--data", text.to_str().unwrap()])), 2);
    let not_model = dir.path().join("m.json");
    std::fs::write(&not_model, "{\"schema\":\"other\"}").unwrap();
    assert_eq!(code(&awdpd(&["eval", "--model", not_model.to_str().unwrap(), "--data", &train])), 2);
}
