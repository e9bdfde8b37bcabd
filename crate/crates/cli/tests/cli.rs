use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const GOLDEN: &str = r#"{
  "frequency": {"kind": "real", "value": "golden", "depth": 30},
  "phase": {"kind": "real", "value": "0.1"},
  "energies": {"start": -3.0, "stop": 3.0, "count": 13},
  "lambdas": [0.5, 1.0, 2.0],
  "le": {"steps": 2000, "phases": 2},
  "eigen": {"half_width": 200, "lambda": 1.0, "scale_n": 5, "epsilon": 0.01},
  "gordon": {"lambda": 0.5, "half_width": 200, "pairs": 2},
  "lemma": {"energies": [1.0], "lambdas": [1.5]}
}"#;

const LIOUVILLE: &str = r#"{
  "frequency": {"kind": "liouville", "beta_target": 2.0, "depth": 3},
  "phase": {"kind": "resonant", "delta_target": 1.5},
  "energies": {"start": -3.0, "stop": 3.0, "count": 13},
  "lambdas": {"start": 0.1, "stop": 3.0, "count": 6}
}"#;

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mosaic"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["le", "--svg"])), 0);
        assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["phase-diagram"])), 0);
    }
    for name in ["le.csv", "le.svg", "phase_diagram.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn headers_carry_the_config_hash() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["indices"])), 0);
    let csv = read(dir.path(), "profile.csv");
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# mosaic indices config-sha256 "), "{first}");
    let hash = first.split_whitespace().nth(4).unwrap();
    assert_eq!(hash.len(), 64);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "indices.json")).unwrap();
    assert_eq!(json["meta"]["config_sha256"], hash);

    // an override changes the effective config and so the hash
    let other = TempDir::new().unwrap();
    assert_eq!(code(&run(other.path(), Some(GOLDEN), &["--seed-phase", "0.3", "indices"])), 0);
    assert!(!read(other.path(), "profile.csv").contains(hash));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let no_phase = r#"{"frequency": {"kind": "real", "value": "golden", "depth": 20}, "energies": [1.0], "lambdas": [1.0]}"#;
    assert_eq!(code(&run(dir.path(), Some(no_phase), &["phase-diagram"])), 2);
    let empty = GOLDEN.replace(r#""lambdas": [0.5, 1.0, 2.0]"#, r#""lambdas": []"#);
    assert_eq!(code(&run(dir.path(), Some(&empty), &["phase-diagram"])), 2);
    assert_eq!(code(&run(dir.path(), Some(r#"{"unknown": 1}"#), &["indices"])), 2);
    assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["lemma-check", "--suite", "nope"])), 2);
    assert_eq!(code(&run(dir.path(), None, &["no-such-command"])), 2);
}

#[test]
fn le_svg_has_one_series_per_lambda() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["le", "--svg"])), 0);
    let svg = read(dir.path(), "le.svg");
    assert!(svg.starts_with("<!-- mosaic le config-sha256 "));
    assert_eq!(svg.matches("<polyline").count(), 3);
    let rows = data_rows(&read(dir.path(), "le.csv"));
    assert_eq!(rows.len(), 13 * 3);
}

#[test]
fn golden_phase_diagram_is_pure_point_off_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["phase-diagram"])), 0);
    let csv = read(dir.path(), "phase_diagram.csv");
    let header: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let (e, v) = (
        header.iter().position(|&h| h == "E").unwrap(),
        header.iter().position(|&h| h == "verdict").unwrap(),
    );
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 13 * 3);
    for r in rows.iter().filter(|r| r[e].parse::<f64>().unwrap().abs() > 1e-9) {
        assert_eq!(r[v], "PurePoint", "{r:?}");
    }
}

#[test]
fn liouville_phase_diagram_has_singular_continuous_cells() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), Some(LIOUVILLE), &["phase-diagram", "--both-conventions"])), 0);
    let csv = read(dir.path(), "phase_diagram.csv");
    assert!(csv.contains("SingularContinuous"));
    assert!(csv.contains("PurePoint"));
    assert!(dir.path().join("out").read_dir().unwrap().count() >= 3);
}

#[test]
fn shipped_lemma_suite_passes() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), None, &["lemma-check", "--suite", "resonant-phase"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("0 violated"), "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "lemmas.json")).unwrap();
    let reports = json["data"][0]["reports"].as_array().unwrap();
    assert!(reports
        .iter()
        .filter(|r| r["verdict"] == "Inconclusive")
        .all(|r| r["notes"].as_str().unwrap().starts_with("gate:")));
}

#[test]
fn custom_suite_and_eigen_run() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), Some(GOLDEN), &["lemma-check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("custom:"));
    assert_eq!(code(&run(dir.path(), Some(GOLDEN), &["eigen"])), 0);
    let decay = read(dir.path(), "decay.csv");
    assert!(data_rows(&decay).len() > 10);
    assert!(read(dir.path(), "eigenvector.svg").contains("<polyline"));
}
