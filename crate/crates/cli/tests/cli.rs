use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn psps(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_psps"));
    cmd.args(args);
    for (key, _) in std::env::vars() {
        if key.starts_with("PSPS_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generate(dir: &Path) {
    let out = psps(&["generate", "--days", "2", "--hours", "2", "--out"]).arg(dir).output().unwrap();
    json_stdout(&out);
}

fn inputs(dir: &Path) -> Vec<String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    vec![
        "--case".into(),
        p("case.json"),
        "--demand".into(),
        p("demand"),
        "--risk-csv".into(),
        p("risk.csv"),
    ]
}

#[test]
fn generate_run_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data);
    let v = json_stdout(&psps(&["validate"]).arg(data.join("case.json")).output().unwrap());
    assert_eq!(v["valid"], true);
    assert_eq!(v["buses"], 21);

    let out = tmp.path().join("run");
    let mut cmd = psps(&["run", "--method", "weighted", "--beta", "0.5", "--export-lp"]);
    cmd.args(inputs(&data)).arg("--out").arg(&out);
    let v = json_stdout(&cmd.output().unwrap());
    assert_eq!(v["days"], 2);
    assert_eq!(v["method"], "weighted");
    for name in ["result.json", "days.csv", "bus_shed.csv", "switching.csv", "bus_shed.geojson", "scenario.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    assert!(out.join("lp/day_02_fair.lp").is_file());

    let r = json_stdout(&psps(&["report", "--in"]).arg(&out).output().unwrap());
    assert_eq!(r["cumulative_shed_pct"], v["cumulative_shed_pct"]);
}

#[test]
fn sweep_csv_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data);
    let sweep = |name: &str, workers: &str| {
        let out = tmp.path().join(name);
        let mut cmd = psps(&["sweep", "--method", "minmax", "--betas", "0.25,0.75", "--workers", workers]);
        cmd.args(inputs(&data)).arg("--out").arg(&out);
        json_stdout(&cmd.output().unwrap());
        fs::read(out.join("sweep.csv")).unwrap()
    };
    let a = sweep("a", "1");
    let b = sweep("b", "2");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("kind,beta,cumulative_shed_pct,mad_normalized,max_shed_pct,mean_hamming,outlier\n"));
    assert_eq!(text.lines().count(), 5);

    let r = json_stdout(&psps(&["report", "--in"]).arg(tmp.path().join("a")).output().unwrap());
    assert_eq!(r["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn errors_are_json_with_exit_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let case = tmp.path().join("bad.json");
    fs::write(&case, r#"{"buses": [{"id": 1, "lon": 0, "lat": 0}], "generators": [], "lines": [{"id": 1, "from": 1, "to": 7, "x": 0.1, "f_max": 1}]}"#).unwrap();
    let out = psps(&["validate"]).arg(&case).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["error"]["kind"], "dangling_reference");
    assert!(err["error"]["chain"].as_array().unwrap().len() >= 2);
}

#[test]
fn environment_supplies_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data);
    let mut cmd = psps(&["run", "--no-bounds"]);
    cmd.args(inputs(&data))
        .arg("--out")
        .arg(tmp.path().join("run"))
        .env("PSPS_METHOD", "range")
        .env("PSPS_BETA", "1.5");
    let out = cmd.output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_parameter");
    assert!(err["error"]["message"].as_str().unwrap().contains("beta"));
}
