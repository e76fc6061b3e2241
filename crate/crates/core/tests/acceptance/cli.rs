use std::path::Path;
use std::process::{Command, Output};

fn degctl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degctl"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn verify_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = degctl(dir.path(), &["verify", "--alpha", "0.5", "--modes", "8", "--horizon", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["alpha"], 0.5);
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn cost_sweep_csv_has_one_certified_row_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = degctl(
        dir.path(),
        &["cost-sweep", "--alphas", "0,0.5,0.9", "--u0", "mode:1", "--format", "csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("cost-sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {\"command\":\"cost-sweep\""));
    assert_eq!(lines.next().unwrap(), "alpha,upper,lower,product_upper,product_lower,N_used");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[2] <= r[1], "lower {} > upper {}", r[2], r[1]);
    }
}

#[test]
fn spectrum_prints_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = degctl(dir.path(), &["spectrum", "--alpha", "0", "--modes", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("lambda = [9.8696044011, 39.4784176044]"), "{stdout}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["synthesize", "--alpha", "1"][..],
        &["simulate", "--horizon", "-1"],
        &["biortho", "--modes", "0"],
        &["synthesize", "--u0", "sin:3"],
        &["frobnicate"],
    ] {
        let out = degctl(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numerical_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = degctl(dir.path(), &["biortho", "--modes", "14"]);
    assert_eq!(out.status.code(), Some(1));
    let out = degctl(dir.path(), &["synthesize", "--target", "mode:10", "--modes", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_honoured_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nmodes = 3\nalpha = 0.3\nformat = csv\n").unwrap();
    let out = degctl(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap(), "--modes", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.contains("\"alpha\":0.3"));
    assert_eq!(text.lines().count(), 4);
}
