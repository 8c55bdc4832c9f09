use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn qcohere(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcohere"))
        .args(args)
        .env("QCOHERE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

/// `sqrt(1 + (log2 d - (1 + 1/d) log2(d + 1)) / 2)` at `d = 8`.
fn pure_total_d8() -> f64 {
    let d = 8.0f64;
    (1.0 + 0.5 * (d.log2() - (1.0 + 1.0 / d) * (d + 1.0).log2())).sqrt()
}

#[test]
fn ghz_report_has_pure_state_total() {
    let out = qcohere(&[
        "coherence",
        "--recipe",
        "ghz",
        "--theta",
        "0.7854",
        "--qubits",
        "3",
        "--starts",
        "2",
        "--max-evals",
        "2000",
    ]);
    let v = json(&out);
    let total = v["total"].as_f64().unwrap();
    assert!((total - pure_total_d8()).abs() < 1e-9);
    assert!((total - 0.8467).abs() < 1e-4);
    let d = &v["decomposition"];
    assert!(d["collective"].as_f64().unwrap() >= d["intrinsic"].as_f64().unwrap() - 1e-9);
    assert_eq!(d["violation"], Value::Bool(false));
}

#[test]
fn maximally_mixed_werner_is_incoherent() {
    let v = json(&qcohere(&[
        "coherence",
        "--recipe",
        "werner",
        "--mu",
        "0",
        "--dim",
        "4",
    ]));
    assert_eq!(v["total"].as_f64().unwrap(), 0.0);
    assert_eq!(v["basis"].as_f64().unwrap(), 0.0);
}

#[test]
fn malformed_matrix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    fs::write(&p, r#"{"dims":[2],"re":[[1,0],[0"#).unwrap();
    let out = qcohere(&["coherence", "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_state_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    fs::write(&p, r#"{"dims":[2],"re":[[0.7,0.0],[0.0,0.7]]}"#).unwrap();
    let out = qcohere(&["coherence", "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace"));
}

#[test]
fn explicit_matrix_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("plus.json");
    fs::write(&m, r#"{"dims":[2],"re":[[0.5,0.5],[0.5,0.5]]}"#).unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(r#"{{"matrix":{:?},"basis":"hadamard"}}"#, m.to_str().unwrap()),
    )
    .unwrap();
    // |+> is incoherent in the Hadamard basis, maximally coherent in Z.
    let v = json(&qcohere(&["coherence", "--config", cfg.to_str().unwrap()]));
    assert!(v["basis"].as_f64().unwrap().abs() < 1e-9);
    let v = json(&qcohere(&[
        "coherence",
        "--config",
        cfg.to_str().unwrap(),
        "--basis",
        "computational",
    ]));
    assert!(v["basis"].as_f64().unwrap() > 0.5);
}

#[test]
fn optimizer_failure_config_is_input_error() {
    let out = qcohere(&["coherence", "--recipe", "bell", "--starts", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{
            "recipe": {"kind": "ising_ground"},
            "param": "xi",
            "grid": {"start": 0.0, "stop": 1.5707963267948966, "points": 5},
            "options": {"intrinsic": {"optimizer": {"starts": 2, "max_evals": 1500}}}
        }"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out_path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_qcohere"))
            .args([
                "sweep",
                "--config",
                spec.to_str().unwrap(),
                "--output",
                out_path.to_str().unwrap(),
            ])
            .env("QCOHERE_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(out_path).unwrap();
        // Drop the wall-time column.
        text.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a.len(), 6);
    assert!(a[0].starts_with("param,C,C_c,C_l,C_I,C_L,C_basis,delta_C,slack29"));
}

#[test]
fn failing_sweep_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"recipe": {"kind": "ising_ground"}, "param": "mu",
            "grid": {"start": 0.0, "stop": 1.0, "points": 3}}"#,
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let out = qcohere(&[
        "sweep",
        "--config",
        spec.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
}

#[test]
fn verify_commands_report_json() {
    let v = json(&qcohere(&[
        "verify-metric",
        "--dims",
        "2,3",
        "--triples",
        "300",
        "--seed",
        "4",
    ]));
    let dims = v["per_dim"].as_array().unwrap();
    assert_eq!(dims.len(), 2);
    for d in dims {
        assert!(d["min_slack"].as_f64().unwrap() >= -1e-12);
    }
    let v = json(&qcohere(&[
        "verify-product",
        "--qubits",
        "2",
        "--states",
        "4",
        "--trials",
        "50",
    ]));
    let sys = &v["per_system"][0];
    assert_eq!(sys["dims"], serde_json::json!([2, 2]));
    assert!(sys["max_violation"].as_f64().unwrap().is_finite());
}

#[test]
fn sample_is_seeded() {
    let a = json(&qcohere(&["sample", "--dims", "2,2", "--seed", "7"]));
    let b = json(&qcohere(&["sample", "--dims", "2,2", "--seed", "7"]));
    assert_eq!(a, b);
    assert_eq!(a["dims"], serde_json::json!([2, 2]));
    let out = qcohere(&["sample", "--dims", "2", "--ensemble", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
