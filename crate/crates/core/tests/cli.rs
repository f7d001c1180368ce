use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qsde::cli::Table;

fn qsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsde")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PRECESSION: &str = r#"{
    "n_qubits": 1,
    "fields": [{"qubit": 0, "schedule": [{"t": 0, "B": [0, 0, 6.283185307179586]}]}],
    "initial": {"product": ["+x"]},
    "ensemble": {"count": 1200, "M": 1.0, "seed": 7, "sampling": "symmetric"},
    "integrator": {"dt": 0.0001, "t_final": 0.5, "output_every": 250},
    "observables": ["x", "y", "z"]
}"#;

const COUPLED: &str = r#"{
    "n_qubits": 2,
    "fields": [{"qubit": 0, "schedule": [{"t": 0, "B": [0, 0, 0.3]}]}],
    "pairs": [{"a": 0, "b": 1, "schedule": [{"t": 0, "J": [[0.5,0,0],[0,0.5,0],[0,0,0.5]]}]}],
    "initial": {"product": ["up", "up"]},
    "ensemble": {"count": 3000, "M": 1.0, "seed": 5},
    "integrator": {"dt": 0.0001, "t_final": 0.01, "output_every": 25, "reset_every": 50},
    "estimator": {"shell": [0.0, 0.8], "batches": 20}
}"#;

#[test]
fn simulate_reference_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", PRECESSION);
    let (sim, reference, cmp) = (dir.path().join("sim.csv"), dir.path().join("ref.csv"), dir.path().join("cmp.csv"));
    assert_eq!(qsde(&["simulate", "--config", s(&cfg), "--out", s(&sim)]).status.code(), Some(0));
    assert_eq!(qsde(&["reference", "--config", s(&cfg), "--out", s(&reference)]).status.code(), Some(0));
    let out = qsde(&["compare", "--sim", s(&sim), "--reference", s(&reference), "--out", s(&cmp)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = Table::read(std::fs::File::open(&cmp).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 21);
    for name in ["dev_x", "dev_y", "dev_z"] {
        let c = table.column(name).unwrap();
        assert!(table.rows.iter().all(|r| r[c].abs() <= 1e-3));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["ensemble"]["count"], 1200);
    assert!(manifest["finished_unix"].as_f64() >= manifest["started_unix"].as_f64());
}

#[test]
fn csv_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", COUPLED);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(qsde(&["simulate", "--config", s(&cfg), "--out", s(&a), "--workers", "1"]).status.code(), Some(0));
    assert_eq!(qsde(&["simulate", "--config", s(&cfg), "--out", s(&b), "--workers", "3"]).status.code(), Some(0));
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let header = String::from_utf8(bytes).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("t,est_0.x,err_0.x,"));
    assert!(header.ends_with(",sum_w,ess,neg_w_frac,escape_frac,underflow_count"));
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.json", PRECESSION);
    let other = write(dir.path(), "q.json", &PRECESSION.replace("\"output_every\": 250", "\"output_every\": 500"));
    let (sim, reference) = (dir.path().join("sim.csv"), dir.path().join("ref.csv"));
    qsde(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    qsde(&["reference", "--config", s(&other), "--out", s(&reference)]);
    let out = qsde(&["compare", "--sim", s(&sim), "--reference", s(&reference)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time grids differ"));
}

#[test]
fn compare_fails_on_large_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write(dir.path(), "sim.csv", "t,est_x,err_x\n0,0.5,0.001\n1,0.3,0.001\n");
    let reference = write(dir.path(), "ref.csv", "t,exact_x\n0,0.5\n1,0.5\n");
    let out = qsde(&["compare", "--sim", s(&sim), "--reference", s(&reference)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn verify_passes_for_seed_42() {
    let out = qsde(&["verify", "--seed", "42", "--divergence-trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("overall: PASS"), "{text}");
}

#[test]
fn verify_fails_with_impossible_tolerance() {
    let out = qsde(&["verify", "--tol", "0", "--divergence-trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let dup = PRECESSION.replace(
        "\"initial\"",
        "\"pairs\": [{\"a\": 0, \"b\": 0, \"schedule\": [{\"t\": 0, \"J\": [[0,0,0],[0,0,0],[0,0,0]]}]}], \"initial\"",
    );
    for (name, text) in [("dup.json", dup.as_str()), ("bad.json", "{\"n_qubits\": 1, \"colour\": 3}")] {
        let cfg = write(dir.path(), name, text);
        let out = qsde(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("x.csv"))]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let missing = qsde(&["simulate", "--config", "/nonexistent.json", "--out", "/tmp/x.csv"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn empty_estimation_shell_is_a_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let text = PRECESSION
        .replace("\"observables\"", "\"estimator\": {\"shell\": [1.5, 2.0]}, \"observables\"");
    let cfg = write(dir.path(), "e.json", &text);
    let out = qsde(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("e.csv"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_codes() {
    assert_eq!(qsde(&["--help"]).status.code(), Some(0));
    assert_eq!(qsde(&["--version"]).status.code(), Some(0));
    assert_eq!(qsde(&[]).status.code(), Some(1));
    assert_eq!(qsde(&["simulate"]).status.code(), Some(1));
    assert_eq!(qsde(&["frobnicate"]).status.code(), Some(1));
}

mod round_trip {
    use proptest::prelude::*;
    use qsde::cli::{emit_config, parse_config};
    use serde_json::json;

    fn spins() -> impl Strategy<Value = &'static str> {
        prop::sample::select(vec!["up", "down", "+x", "-x", "+y", "-y"])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parse_emit_parse_is_identity(
            n in 1usize..=3,
            b in prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), 3),
            j in prop::array::uniform3(prop::array::uniform3(-2.0..2.0f64)),
            switch in 0.001..1.0f64,
            init in prop::collection::vec(spins(), 3),
            count in 1usize..100_000,
            seed in any::<u64>(),
            shell in prop::option::of((0.0..0.5f64, 0.6..1.0f64)),
            reset in prop::option::of(1u64..1000),
        ) {
            let fields: Vec<_> = (0..n)
                .map(|q| json!({"qubit": q, "schedule": [{"t": 0.0, "B": b[q]}, {"t": switch, "B": [0.0, 0.0, 1.0]}]}))
                .collect();
            let pairs: Vec<_> = (0..n.saturating_sub(1))
                .map(|q| json!({"a": q, "b": q + 1, "schedule": [{"t": 0.0, "J": j}]}))
                .collect();
            let mut estimator = json!({"batches": 50});
            if let Some((r, big_r)) = shell {
                estimator["shell"] = json!([r, big_r]);
            }
            let mut integrator = json!({"dt": 0.001, "t_final": 0.1, "output_every": 10});
            if let Some(k) = reset {
                integrator["reset_every"] = json!(k);
            }
            let text = json!({
                "n_qubits": n,
                "fields": fields,
                "pairs": pairs,
                "initial": {"product": &init[..n]},
                "ensemble": {"count": count, "M": 1.0, "seed": seed},
                "integrator": integrator,
                "estimator": estimator,
            })
            .to_string();
            let p = parse_config(&text, None).unwrap();
            let again = parse_config(&emit_config(&p.config), None).unwrap();
            prop_assert_eq!(again, p);
        }
    }
}
