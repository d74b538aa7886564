use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morphquad"))
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn hover_simulation_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("hover.toml");
    let res = run(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(dir.path());
    assert!(s["max_psi"].as_f64().unwrap() < 1e-6);
    assert!(s["max_ep"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["diverged"], false);
    for key in ["rms_ep", "max_ep", "max_psi", "mean_energy", "saturation_fraction", "diverged"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("telemetry.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), morphquad::telemetry::csv_header());
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 48);
    // 17 significant digits
    assert_eq!(first[3], "2.0000000000000000e0");
    assert_eq!(csv.lines().count(), 5001);
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn corkscrew_summary_reports_aim_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(scenarios().join("corkscrew.toml")).unwrap();
    let cfg = write_config(
        dir.path(),
        "short.toml",
        &base.replace("summary_start = 1.0", "summary_start = 1.0\nduration = 3.0"),
    );
    let out = dir.path().join("out");
    let res = run(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert!(s["max_aim_error"].as_f64().unwrap() < 1e-3);
    assert!(s["rms_aim_error"].as_f64().is_some());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("typo.toml", "[vehicle]\nmas = 4.0\n"),
        ("syntax.toml", "[sim\ndt = 0.001\n"),
        ("value.toml", "[sim]\ndt = -0.001\n"),
        ("kind.toml", "[trajectory]\nkind = \"loop\"\n"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let res = run(&["simulate", "--config", cfg.to_str().unwrap()], &out);
        assert_eq!(res.status.code(), Some(2), "{name}");
        assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
        assert!(!out.exists(), "{name}");
    }
    let res = run(&["simulate", "--config", "/definitely/missing.toml"], &out);
    assert_eq!(res.status.code(), Some(2));
    let diag = String::from_utf8_lossy(
        &run(&["simulate", "--config", dir.path().join("typo.toml").to_str().unwrap()], &out).stderr,
    )
    .to_string();
    assert!(diag.contains("line 2") && diag.contains("mas"), "{diag}");
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "div.toml",
        "[sim]\ndivergence_bound = 0.5\n[trajectory]\nkind = \"hover\"\nduration = 1.0\n[initial]\nposition = [2.0, 0.0, 0.0]\n",
    );
    let out = dir.path().join("out");
    let res = run(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(summary(&out)["diverged"], true);
}

#[test]
fn envelope_document() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["envelope"], dir.path());
    assert!(res.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("envelope.json")).unwrap()).unwrap();
    assert_eq!(doc["max_thrust"], 20.0);
    assert_eq!(doc["force"]["samples"].as_array().unwrap().len(), 1000);
    let f = &doc["force"]["summary"];
    assert!((f["min"].as_f64().unwrap() - 80.0).abs() < 1e-6);
    assert!((f["max"].as_f64().unwrap() - 80.0).abs() < 1e-6);
    let ratio = doc["torque"]["summary"]["ratio"].as_f64().unwrap();
    assert!((0.4..=0.6).contains(&ratio));

    let one = tempfile::tempdir().unwrap();
    assert!(run(&["envelope", "--n-dirs", "1"], one.path()).status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(one.path().join("envelope.json")).unwrap()).unwrap();
    assert_eq!(doc["force"]["samples"].as_array().unwrap().len(), 1);
    assert_eq!(doc["torque"]["samples"].as_array().unwrap().len(), 1);
    assert_eq!(doc["force"]["summary"]["ratio"], 1.0);
    assert_eq!(run(&["envelope", "--n-dirs", "0"], one.path()).status.code(), Some(2));
}

#[test]
fn roa_csv_is_deterministic_and_records_outside_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "roa.toml", "[roa]\nsamples = 6\nhorizon = 10.0\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = run(&["roa", "--config", cfg.to_str().unwrap(), "--seed", "5"], out);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        assert!(String::from_utf8_lossy(&res.stdout).contains("converged 6/6"));
    }
    let bytes = std::fs::read(a.join("roa.csv")).unwrap();
    assert_eq!(bytes, std::fs::read(b.join("roa.csv")).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().next().unwrap(), morphquad::roa::CSV_HEADER);

    let outside = write_config(dir.path(), "outside.toml", "[roa]\nsamples = 4\nhorizon = 2.0\nomega_fraction = 1.5\n");
    let c = dir.path().join("c");
    let res = run(&["roa", "--config", outside.to_str().unwrap(), "--samples", "3"], &c);
    assert!(res.status.success());
    let csv = std::fs::read_to_string(c.join("roa.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for row in csv.lines().skip(1) {
        // inside_roa column is 0
        assert_eq!(row.split(',').nth(8), Some("0"));
    }
}

#[test]
fn allocate_yaw_rows() {
    let res = bin().args(["allocate", "--force", "0,0,0", "--torque", "0,0,4"]).output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let diff: f64 = text
        .lines()
        .find(|l| l.starts_with("oracle_diff"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff < 1e-9);
    // each arm pushes tangentially with |t| = τ_z / (4 r)
    let r = (0.25f64 * 0.25 * 2.0).sqrt();
    for row in text.lines().skip(1).take(4) {
        let c: Vec<f64> = row.split_whitespace().skip(1).take(3).map(|x| x.parse().unwrap()).collect();
        assert!(((c[0] * c[0] + c[1] * c[1]).sqrt() - 1.0 / r).abs() < 1e-5);
        assert_eq!(c[2], 0.0);
    }
}
