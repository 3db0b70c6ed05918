use std::path::Path;
use std::process::{Command, Output};

use scqkd::harness::{config_from_manifest, parse_config, Cli};

fn scqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scqkd"))
        .args(args)
        .env_remove("SCQKD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().expect("utf-8 temp path").to_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = scqkd(&[flag]);
        assert_eq!(out.status.code(), Some(0), "{flag}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_and_parameter_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let cases: [&[&str]; 5] = [
        &["--bogus"],
        &["--out", &out],
        &["--rounds", "100", "--attack", "number-preserving", "--theta", "2.0", "--out", &out],
        &["--rounds", "100", "--attack", "sideways", "--out", &out],
        &["--sweep", "1:0:10", "--out", &out],
    ];
    for args in cases {
        assert_eq!(scqkd(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn honest_run_accepts_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = scqkd(&["--rounds", "20000", "--seed", "4", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: ACCEPT"));

    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["verdict"], "ACCEPT");
    assert_eq!(summary["test_set"]["error_rate"], 0.0);
    assert_eq!(summary["session"]["rounds"], 20000);
    let counts = summary["session"]["counts"].as_object().unwrap();
    assert!(counts.contains_key("FA/D1"));
    assert_eq!(counts.values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 20000);

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["rng"], "chacha20-stream/v1");
    assert_eq!(manifest["outputs"], serde_json::json!(["summary.json", "rounds.csv"]));

    let mut rows = csv::Reader::from_path(dir.path().join("rounds.csv")).unwrap();
    let header: Vec<String> = rows.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, ["index", "alice", "bob", "outcome", "bit", "t_s", "t_r", "pol_sent", "pol_basis", "pol_result"]);
    assert_eq!(rows.records().count(), 20000);
}

#[test]
fn strong_attack_without_return_leg_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--rounds", "100000", "--attack", "number-preserving", "--theta", "0.9", "--seed", "9"];
    let out = scqkd(&[&args[..], &["--return-leg", "none", "--out", &out_arg(dir.path())]].concat());
    assert_eq!(out.status.code(), Some(2));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["verdict"], "ABORT");
    assert!(summary["reasons"].as_array().unwrap().len() == 2);

    // Restoring the probe on the way back hides the attack from the test set.
    let dir = tempfile::tempdir().unwrap();
    let out = scqkd(&[&args[..], &["--out", &out_arg(dir.path())]].concat());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_scqkd"))
        .args(["--rounds", "500"])
        .env("SCQKD_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("manifest.json").is_file());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "rounds = 3000\nseed = 8\nattack = \"number-preserving\"\ntheta = 0.4\n").unwrap();
    let out = out_arg(&dir.path().join("out"));
    let status = scqkd(&["--config", file.to_str().unwrap(), "--seed", "12", "--out", &out]).status;
    assert_eq!(status.code(), Some(0));
    let cfg = config_from_manifest(&dir.path().join("out/manifest.json")).unwrap();
    assert_eq!(cfg.rounds, Some(3000));
    assert_eq!(cfg.seed, 12);
    assert_eq!(cfg.theta, 0.4);
}

#[test]
fn manifest_reproduces_the_run() {
    use clap::Parser;
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let args = [
        "scqkd",
        "--rounds",
        "30000",
        "--attack",
        "incoherent",
        "--alpha0p",
        "0.3",
        "--theta",
        "0.7",
        "--trojan",
        "both",
        "--loss",
        "0.05",
        "--seed",
        "21",
        "--out",
        first.to_str().unwrap(),
    ];
    let inv = parse_config(Cli::try_parse_from(args).unwrap()).unwrap();
    assert_eq!(scqkd(&args[1..]).status.code(), Some(0));
    assert_eq!(config_from_manifest(&first.join("manifest.json")).unwrap(), inv.config);

    let echo = dir.path().join("echo.json");
    let manifest = read_json(&first.join("manifest.json"));
    std::fs::write(&echo, serde_json::to_string(&manifest["config"]).unwrap()).unwrap();
    let second = dir.path().join("second");
    let status = scqkd(&["--config", echo.to_str().unwrap(), "--out", second.to_str().unwrap()]).status;
    assert_eq!(status.code(), Some(0));
    for name in ["summary.json", "rounds.csv"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_writes_decreasing_key_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = scqkd(&["--sweep", "0:1.5:100", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("summary.json").exists());
    let mut rows = csv::Reader::from_path(dir.path().join("curve.csv")).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["theta", "V", "e", "I_E", "I_AB", "K"]);
    let k: Vec<f64> = rows.records().map(|r| r.unwrap()[5].parse().unwrap()).collect();
    assert_eq!(k.len(), 100);
    assert_eq!(k[0], 1.0);
    assert!(k.windows(2).all(|w| w[1] < w[0]));
    assert!(k[99] < 0.0);
}
