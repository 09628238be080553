use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn transgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transgeom")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn square(dir: &Path) -> String {
    write(dir, "square.json", &json!({"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn strip_runtime(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("runtime_ms");
            m.values_mut().for_each(strip_runtime);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_runtime),
        _ => {}
    }
}

#[test]
fn eval_reports_intrinsic_volumes_of_the_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = transgeom(&["eval", "--body", &square(dir.path())]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    let values: Vec<f64> = v["values"].as_array().unwrap().iter().map(|x| x["value"].as_f64().unwrap()).collect();
    for (got, want) in values.iter().zip([1.0, 2.0, 1.0]) {
        assert!((got - want).abs() < 1e-12, "{values:?}");
    }
    assert!((v["total"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(v["polytope"]["vertices"].as_array().unwrap().len(), 4);

    let o = transgeom(&["--format", "csv", "eval", "--body", &square(dir.path()), "--j", "1"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "j,value\n1,2\n");
}

#[test]
fn translative_check_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let sq = square(dir.path());
    let out = dir.path().join("out");
    let o = transgeom(&[
        "--out", out.to_str().unwrap(),
        "translative-check", "--bodies", &sq, &sq, "--j", "0", "1", "--samples", "20000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    assert!(out.join("report.json").is_file() && out.join("report.csv").is_file());
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn corrupt_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = transgeom(&["eval", "--body", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json"), "{err}");

    let cfg = write(dir.path(), "suite.json", &json!({"checks": [{"kind": "identity", "body": "missing.json", "expected": 1.0}]}));
    let o = transgeom(&["suite", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
}

#[test]
fn failing_check_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "suite.json",
        &json!({"checks": [{"kind": "identity", "body": square(dir.path()), "j": 1, "expected": 3.0}]}),
    );
    let o = transgeom(&["suite", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["pass"], json!(false));
}

#[test]
fn empty_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "suite.json", &json!({"checks": []}));
    let o = transgeom(&["suite", &cfg]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["pass"], json!(true));
    assert!(v["reports"].as_array().unwrap().is_empty());
}

#[test]
fn suite_output_is_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sq = square(dir.path());
    let model = write(dir.path(), "model.json", &json!({"gamma": 0.5, "isotropic": true, "shapes": [{"polytope": {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}, "p": 1.0}]}));
    let window = write(dir.path(), "window.json", &json!({"dim": 2, "vertices": [[0, 0], [6, 0], [6, 6], [0, 6]]}));
    let cfg = write(
        dir.path(),
        "suite.json",
        &json!({"seed": 9, "checks": [
            {"kind": "identity", "body": sq, "j": 1, "expected": 2.0},
            {"kind": "translative", "bodies": [sq, sq], "js": [0], "samples": 5000},
            {"kind": "kinematic", "bodies": [sq, sq], "j": 0, "samples": 5000},
            {"kind": "boolean", "model": model, "window": window, "js": [2, 1], "runs": 10, "pair_samples": 2000},
        ]}),
    );
    let run = |workers: &str| {
        let o = transgeom(&["--workers", workers, "suite", &cfg]);
        assert!(o.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&o.stderr));
        let mut v = stdout_json(&o);
        strip_runtime(&mut v);
        v.to_string()
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("3"));
    let o = transgeom(&["--seed", "10", "suite", &cfg]);
    let mut other = stdout_json(&o);
    strip_runtime(&mut other);
    assert_ne!(one, other.to_string());
}

#[test]
fn approx_writes_pieces_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let bodies = write(
        dir.path(),
        "bodies.json",
        &json!([
            {"kind": "ball", "center": [0, 0], "radius": 1.0},
            {"kind": "polytope", "polytope": {"dim": 2, "vertices": [[0, 0], [0.5, 0], [0, 0.5]]}},
        ]),
    );
    let out = dir.path().join("approx");
    let o = transgeom(&["--out", out.to_str().unwrap(), "approx", "--bodies", &bodies, "--eps", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["piece_0.json", "piece_1.json", "union.json", "certificate.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["sandwich_ok"], json!(true));
    assert_eq!(cert["union_ok"], json!(true));
}
