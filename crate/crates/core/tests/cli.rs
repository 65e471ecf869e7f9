use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkv-stefan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("c.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const COARSE: &str =
    r#""simulation": {"alpha": 1.0, "dt": 0.01, "dx": 0.01, "x_max": 5.0, "picard_tol": 1e-10}"#;

#[test]
fn solve_writes_path_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(r#"{{ {COARSE}, "law": {{"type": "dirac_mixture", "atoms": [[1.0, 1.0]]}} }}"#),
    );
    let out = dir.path().join("out");
    let o = bin(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("lambda.csv")).unwrap();
    assert!(csv.starts_with("t,lambda\n"));
    assert_eq!(csv.lines().count(), 1 + 1 + 101);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["grid"]["dx"], 0.01);
    assert!(summary["max_ledger_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn solve_physical_in_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{ {COARSE}, "solver": "physical", "law": {{"type": "uniform", "a": 0.0, "b": 0.5}} }}"#
        ),
    );
    let out = dir.path().join("out");
    let o = bin(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let path: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("lambda.json")).unwrap()).unwrap();
    let first = path["values"][1].as_f64().unwrap();
    assert!((first - 1.0).abs() <= 0.01, "{first}");
}

#[test]
fn crossing_laws_exit_with_ordering_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{ {COARSE}, "law": {{"type": "uniform", "a": 0.0, "b": 2.0}},
                "sequence": {{"kind": "laws", "values": [{{"type": "uniform", "a": 0.9, "b": 1.1}}]}} }}"#
        ),
    );
    let out = dir.path().join("out");
    let o = bin(&[
        "converge-scan",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("OrderingViolation"));
}

#[test]
fn jump_on_density_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.csv");
    let mut text = String::from("x,density\n");
    for k in 0..400 {
        text.push_str(&format!("{},{}\n", (k as f64 + 0.5) * 1e-3, 2.0));
    }
    fs::write(&d, text).unwrap();
    let o = bin(&["jump", "--density", d.to_str().unwrap(), "--alpha", "1"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((v - 0.8).abs() <= 1e-3, "{v}");
}

#[test]
fn usage_errors_name_the_flag() {
    let o = bin(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus"));
    let o = bin(&["solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn m1_between_csv_paths() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let g = dir.path().join("g.csv");
    fs::write(&f, "t,lambda\n0,0\n1,1\n2,1\n").unwrap();
    fs::write(&g, "t,lambda\n0,0\n1.25,1\n2,1\n").unwrap();
    let o = bin(&[
        "m1",
        "--f",
        f.to_str().unwrap(),
        "--g",
        g.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn particles_are_reproducible_from_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{ {COARSE}, "law": {{"type": "uniform", "a": 0.0, "b": 1.0}}, "particles": 2000 }}"#
        ),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = bin(&[
            "particles",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(out.join("cascades.json").exists());
        fs::read_to_string(out.join("lambda.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn experiments_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{ {COARSE}, "law": {{"type": "dirac_mixture", "atoms": [[1.0, 1.0]]}}, "shifts": [-0.25, 0.0, 0.25] }}"#
        ),
    );
    for sub in ["shift-scan", "converge-scan"] {
        let out = dir.path().join(sub);
        let o = bin(&[sub, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert!(report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["passed"] == true));
        assert!(out.join("lambda_00.csv").exists());
    }
    let cfg = write_config(
        dir.path(),
        &format!(r#"{{ {COARSE}, "law": {{"type": "dirac_mixture", "atoms": [[1.0, 1.0]]}} }}"#),
    );
    let out = dir.path().join("left");
    let o = bin(&[
        "left-limit",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["gap"].as_f64().unwrap() >= -1e-12);
}
