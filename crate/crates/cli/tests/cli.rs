use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin-lab"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_writes_basis_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["spectrum", "--cutoff", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let basis = json(&dir.path().join("basis.json"));
    for key in ["gamma", "s", "grid", "pairs"] {
        assert!(basis.get(key).is_some(), "missing {key}");
    }
    assert_eq!(basis["grid"]["a"], -1.0);
    assert_eq!(basis["grid"]["b"], 1.0);
    let pair = &basis["pairs"][0];
    for key in ["n", "m", "lambda_sq", "vector"] {
        assert!(pair.get(key).is_some(), "missing pair.{key}");
    }
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,m,lambda_sq,mu"));
    assert_eq!(csv.lines().count() - 1, basis["pairs"].as_array().unwrap().len());
    let report = json(&dir.path().join("spectrum-report.json"));
    assert_eq!(report["verdicts"][0]["criterion"], "1");
    assert!(dir.path().join("timings.json").exists());
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["geodesics", "--samples", "12", "--T0", "40"];
    let mut with_threads = vec!["--threads", "1"];
    with_threads.extend_from_slice(&args);
    assert_eq!(lab(a.path(), &with_threads).status.code(), Some(0));
    assert_eq!(lab(b.path(), &args).status.code(), Some(0));
    for name in ["geodesics-report.json", "gcc.json", "trajectory.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let csv = fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,y,xi,eta,p"));
}

#[test]
fn seed_changes_sampled_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["geodesics", "--samples", "8", "--T0", "40"];
    lab(a.path(), &args);
    let mut seeded = vec!["--seed", "11"];
    seeded.extend_from_slice(&args);
    lab(b.path(), &seeded);
    assert_ne!(
        fs::read(a.path().join("gcc.json")).unwrap(),
        fs::read(b.path().join("gcc.json")).unwrap()
    );
}

#[test]
fn evolve_reads_a_saved_basis() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["spectrum", "--cutoff", "6"]).status.code(), Some(0));
    let basis = dir.path().join("basis.json");
    let out = lab(
        dir.path(),
        &["evolve", "--basis", basis.to_str().unwrap(), "--mode", "2", "--t", "0.5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("evolve-report.json"));
    assert!(report["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));
    let state = json(&dir.path().join("state.json"));
    assert!(state.get("basis_id").is_some() && state.get("coeffs").is_some());
}

#[test]
fn groundstate_and_quasimode_documents() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["groundstate"]).status.code(), Some(0));
    let gs = json(&dir.path().join("gs.json"));
    for key in ["gamma", "mu0", "c_gamma", "radius", "samples"] {
        assert!(gs.get(key).is_some(), "missing {key}");
    }
    assert!((gs["mu0"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    lab(dir.path(), &["quasimode", "--n", "3"]);
    let packet = json(&dir.path().join("packet.json"));
    for key in ["initial_norm", "omega_mass", "source_norm", "poisson_envelope"] {
        assert!(packet.get(key).is_some(), "missing {key}");
    }
    let row = &packet["poisson_envelope"][0];
    for key in ["m", "bound", "measured"] {
        assert!(row.get(key).is_some(), "missing envelope.{key}");
    }
}

#[test]
fn empty_suite_passes_and_failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["suite"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("suite-report.json"));
    assert!(report["verdicts"].as_array().unwrap().is_empty());

    // window stability of the decay bound is out of reach at this truncation
    let out = lab(dir.path(), &["damped", "--cutoff", "8", "decay-fit", "--modes", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"gamma": 1, "colour": "red"}"#).unwrap();
    let out = lab(dir.path(), &["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(out.status.code(), Some(2));

    let out = lab(dir.path(), &["resolvent-scan", "--h", "0.5,0.25"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("quasimode_builder"));
}

#[test]
fn config_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"gamma": 2, "cutoff": 6}"#).unwrap();
    lab(dir.path(), &["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(json(&dir.path().join("basis.json"))["gamma"], 2.0);
    lab(dir.path(), &["--config", cfg.to_str().unwrap(), "spectrum", "--gamma", "1"]);
    assert_eq!(json(&dir.path().join("basis.json"))["gamma"], 1.0);
}

#[test]
fn suite_filter_runs_requested_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["suite", "--criteria", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion 1: PASS"));
    let items = json(&dir.path().join("suite.json"));
    assert_eq!(items.as_array().unwrap().len(), 1);
}
