use std::path::Path;
use std::process::{Command, Output};

fn obm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obm")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn simulate_then_estimate_and_ci() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(obm(d, &["simulate", "--n", "500", "--seed", "7", "--out", "p.csv"]).status.success());
    assert!(d.join("p.csv").exists() && d.join("p.json").exists());

    let est = json(&obm(d, &["estimate", "--path", "p.csv"]));
    assert_eq!(est["n"], 500);
    let rho = est["rho_hat"].as_f64().unwrap();
    assert!(rho.abs() <= 1.0);
    assert!(est["value"].as_f64().unwrap() >= 0.0);

    let ci = json(&obm(d, &["ci", "--path", "p.csv", "--n-mc", "2000"]));
    assert_eq!(ci["rho_hat"].as_f64().unwrap(), rho);
    assert_eq!(ci["quantiles"]["n_mc"], 2000);
    if !ci["degenerate"].as_bool().unwrap() {
        assert!(ci["ci_lo"].as_f64().unwrap() <= rho && rho <= ci["ci_hi"].as_f64().unwrap());
    }
}

#[test]
fn loglik_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(obm(d, &["simulate", "--n", "200", "--out", "p.csv"]).status.success());
    let out = obm(d, &["loglik", "--path", "p.csv", "--theta-lo", "-0.1", "--theta-hi", "0.1", "--theta-step", "0.01"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,ell");
    assert_eq!(lines.len(), 22);
    assert!(lines.iter().any(|l| l.starts_with("0,") || l.ends_with(",0")));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"alpha": 0.5, "beta": 0.2, "seed": 3, "n_mc": 1000}"#).unwrap();
    let a = json(&obm(d, &["limit-quantiles", "--config", "c.json"]));
    assert_eq!(a["seed"], 3);
    assert_eq!(a["n_mc"], 1000);
    let b = json(&obm(d, &["limit-quantiles", "--config", "c.json", "--seed", "4", "--draws-out", "z.csv"]));
    assert_eq!(b["seed"], 4);
    assert_eq!(std::fs::read_to_string(d.join("z.csv")).unwrap().lines().count(), 1001);
    let again = json(&obm(d, &["limit-quantiles", "--config", "c.json"]));
    assert_eq!(a, again);
}

#[test]
fn experiment_writes_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = obm(
        d,
        &[
            "experiment", "consistency", "--n-values", "100,200,400", "--replications", "4", "--output-dir", "o",
        ],
    );
    let table = json(&out);
    assert_eq!(table.as_array().unwrap().len(), 3);
    for f in ["consistency_runs.csv", "consistency_runs.json", "consistency_summary.csv", "consistency_summary.json"] {
        assert!(d.join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(obm(d, &["estimate", "--path", "missing.csv"]).status.code(), Some(2));
    assert_eq!(obm(d, &["limit-quantiles", "--alpha", "-1"]).status.code(), Some(2));
    assert_eq!(obm(d, &["limit-quantiles", "--level", "1.5"]).status.code(), Some(2));
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(obm(d, &["limit-quantiles", "--config", "bad.json"]).status.code(), Some(2));
    assert_eq!(obm(d, &["experiment", "coverage", "--n-values", "100000"]).status.code(), Some(2));
    assert_eq!(obm(d, &["bogus"]).status.code(), Some(2));
    // Equal volatilities carry no information about the threshold.
    assert_eq!(obm(d, &["limit-quantiles", "--alpha", "0.3", "--beta", "0.3"]).status.code(), Some(2));
}
