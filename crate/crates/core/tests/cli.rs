//! Drives the `ctselect` binary end to end in scratch directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, sub: &str, config: &str) -> Output {
    let cfg = dir.join("run.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ctselect"))
        .args([sub, "--config"])
        .arg(&cfg)
        .env_remove("CTSELECT_OUTPUT_DIR")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{
  "replications": { "moments": 2000, "risk": 100 },
  "required_checks": []
}"#;

fn pipeline(dir: &Path, config: &str) {
    for sub in ["simulate", "estimate", "select", "risk", "verify", "report"] {
        let o = run(dir, sub, config);
        assert!(o.status.success(), "{sub}: {}", stderr(&o));
    }
}

#[test]
fn pipeline_writes_every_artifact_and_report_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), SMALL);
    pipeline(b.path(), SMALL);
    let out = a.path().join("out");
    for f in [
        "samples.csv",
        "samples.json",
        "coefficients.csv",
        "estimate.json",
        "costs.csv",
        "selection.json",
        "reconstruction.pgm",
        "reconstruction.json",
        "risk.json",
        "risk_table.csv",
        "verify.csv",
        "verify.json",
        "report.json",
        "metadata.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let first = fs::read(out.join("report.json")).unwrap();
    let second = fs::read(b.path().join("out/report.json")).unwrap();
    assert_eq!(first, second);

    let report = json(&out.join("report.json"));
    assert_eq!(report["seed"], 20240611);
    assert_eq!(report["risk"]["seed"], 20240611);
    let pgm = fs::read(out.join("reconstruction.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n128 128\n255\n"));
    assert_eq!(pgm.len(), "P5\n128 128\n255\n".len() + 128 * 128);
    let costs = fs::read_to_string(out.join("costs.csv")).unwrap();
    assert!(costs.starts_with("beta,ell,quad,cross,penalty,total,error,selected\n"));
    assert_eq!(costs.lines().filter(|l| l.ends_with(",true")).count(), 1);
}

#[test]
fn verify_on_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "verify", "{}");
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/verify.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 15);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    for rec in reader.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[3], "true", "{rec:?}");
    }
}

#[test]
fn noiseless_known_level_selects_the_best_weight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
  "sigma_mode": "known",
  "noise": {
    "models": [{ "kind": "gaussian", "sigma": 0.05 }],
    "sigma_lo": 0.02, "sigma_hi": 0.1, "fourth_hi": 0.02,
    "simulate": { "kind": "gaussian", "sigma": 0.0 }
  }
}"#;
    for sub in ["simulate", "estimate", "select"] {
        let o = run(dir.path(), sub, cfg);
        assert!(o.status.success(), "{sub}: {}", stderr(&o));
    }
    let sel = json(&dir.path().join("out/selection.json"));
    assert_eq!(sel["sigma_used"], 0.0);
    assert_eq!(sel["error"], sel["best_error"]);
}

#[test]
fn bad_delta_names_the_interval_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "simulate", "{\n  \"m\": 8,\n  \"delta\": 0.2\n}\n");
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("run.json:3"), "{msg}");
    assert!(msg.contains("(0, 1/8)"), "{msg}");
}

#[test]
fn missing_upstream_artifact_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "estimate", "{}");
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("samples.csv") && msg.contains("run `simulate` first"), "{msg}");
    let o = run(dir.path(), "report", "{}");
    assert!(stderr(&o).contains("run `simulate` first"));
}

#[test]
fn output_directory_follows_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("elsewhere");
    fs::write(dir.path().join("run.json"), "{}").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ctselect"))
        .args(["simulate", "--config", "run.json"])
        .env("CTSELECT_OUTPUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("samples.csv").is_file());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn samples_round_trip_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), "simulate", "{}").status.success());
    let text = fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    assert!(text.starts_with("j1,j2,l,s,radon_value,noise,y\n"));
    // drop sample 7 of the first axis direction from every index on it
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            !(f[1] == "0" && f[2] == "7")
        })
        .collect();
    fs::write(dir.path().join("out/samples.csv"), kept.join("\n") + "\n").unwrap();
    let o = run(dir.path(), "estimate", "{}");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("l = 7"), "{}", stderr(&o));
}
