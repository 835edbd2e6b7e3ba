use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use poscub::cubature::Cubature;
use poscub::geometry::DomainSpec;
use tempfile::TempDir;

fn poscub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poscub"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SQUARE: &str = r#"{"type":"cube","center":[0,0],"radius":1}"#;

const BALL3_SQRT: &str = r#"{
  "domain": {"type":"ball","center":[0,0,0],"radius":1},
  "weight": {"type":"radial_power","p":0.5},
  "space": "algebraic",
  "degree": 2
}"#;

const UNION: &str = r#"{"type":"union","disjoint":true,"parts":[
  {"type":"ball","center":[0,0],"radius":1},
  {"type":"cube","center":[1.5,1.5],"radius":0.5}]}"#;

#[test]
fn construct_square_trig_degree_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "square.json", SQUARE);
    let out = dir.path().join("rule.json");
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--space", "trigonometric", "--degree", "0", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rule = Cubature::load_json(&out).unwrap();
    assert_eq!(rule.len(), 1);
    assert!((rule.weights()[0] - 4.0).abs() <= 1e-10);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"moment_provenance\": \"analytic\""));
    assert!(String::from_utf8_lossy(&res.stdout).contains("K = 1"));
}

#[test]
fn construct_and_verify_weighted_ball() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "b3.json", BALL3_SQRT);
    let out = dir.path().join("rule.json");
    let csv = dir.path().join("rule.csv");
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--out", s(&out), "--csv", s(&csv)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rule = Cubature::load_json(&out).unwrap();
    assert!(rule.len() <= 10);

    let lines: Vec<String> = fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "x_1,x_2,x_3,w");
    assert_eq!(lines.len(), rule.len() + 1);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[3], rule.weights()[0]);

    let res = poscub(&["verify", s(&out), "--domain-config", s(&cfg)]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(res.status.code(), Some(0), "{stdout}");
    for name in ["positivity", "interiority", "node-count", "exactness"] {
        assert!(stdout.contains(&format!("PASS {name}")), "{stdout}");
    }
}

#[test]
fn union_rule_stays_inside() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "union.json", UNION);
    let out = dir.path().join("rule.json");
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--degree", "2", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rule = Cubature::load_json(&out).unwrap();
    assert!(rule.len() <= 6);
    let domain: DomainSpec = serde_json::from_str(UNION).unwrap();
    let domain = domain.build().unwrap();
    assert!(rule.nodes().iter().all(|x| domain.contains(x)));
}

#[test]
fn verify_flags_negative_weight_and_wrong_degree() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "square.json", SQUARE);
    let out = dir.path().join("rule.json");
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--degree", "2", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0));

    let res = poscub(&["verify", s(&out), "--domain-config", s(&cfg), "--degree", "3"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL exactness"));

    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let w0 = doc["weights"][0].as_f64().unwrap();
    doc["weights"][0] = serde_json::json!(-w0);
    let edited = write(&dir, "edited.json", &doc.to_string());
    let res = poscub(&["verify", s(&edited), "--domain-config", s(&cfg)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL positivity"));
}

#[test]
fn config_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "square.json", SQUARE);
    let missing = dir.path().join("missing.json");
    assert_eq!(poscub(&["construct", "--domain-config", s(&missing), "--degree", "1"]).status.code(), Some(3));
    assert_eq!(poscub(&["construct", "--degree", "1"]).status.code(), Some(3));
    assert_eq!(poscub(&["construct", "--domain-config", s(&cfg)]).status.code(), Some(3));
    let typo = write(&dir, "typo.json", r#"{"domain": {"type":"cube","center":[0],"radius":1}, "degre": 2}"#);
    assert_eq!(poscub(&["construct", "--domain-config", s(&typo)]).status.code(), Some(3));
    // no analytic moments for the union with a radial weight
    let union = write(&dir, "union.json", UNION);
    let res = poscub(&["construct", "--domain-config", s(&union), "--degree", "1", "--moments", "analytic", "--weight-power", "0.5"]);
    assert_eq!(res.status.code(), Some(3));
    let garbage = write(&dir, "rule.json", "{\"dimension\": 2}");
    assert_eq!(poscub(&["verify", s(&garbage), "--domain-config", s(&cfg), "--degree", "1"]).status.code(), Some(3));
}

#[test]
fn node_cap_is_a_construction_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "square.json", SQUARE);
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--degree", "4", "--seed-cap", "20"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("node cap 20"));
}

#[test]
fn qmc_rule_records_its_provenance() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "union.json", UNION);
    let out = dir.path().join("rule.json");
    let res = poscub(&["construct", "--domain-config", s(&cfg), "--degree", "1", "--moments", "qmc", "--qmc-samples", "65536", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["moment_provenance"], "qmc");
    assert_eq!(doc["qmc_samples"], 65536);
    let res = poscub(&["verify", s(&out), "--domain-config", s(&cfg)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn benchmark_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "square.json", SQUARE);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let res = poscub(&["benchmark", "--domain-config", s(&cfg), "--degree", "4", "--function", "product", "--csv", s(path)]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("m,K,function,reference"));
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let k: usize = cols[1].parse().unwrap();
        let n: usize = cols[6].parse().unwrap();
        assert!(n <= k, "{line}");
        assert_eq!(cols[4], "analytic");
        assert_eq!(cols[5], "0");
        assert_eq!(cols[10], "ok");
    }
}
