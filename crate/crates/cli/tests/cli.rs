use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn symplab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symplab"))
        .args(args)
        .env("SYMPLAB_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn verdict(out: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{name}_verdict.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lemma3_rows_pass_on_polar_entry() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["run", "lemma3", "--entry", "polterovich_polar", "--n", "1,4,16", "--s", "0.5", "--N", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("lemma3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,f_label,g_label,s,N,L,bound,pass"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn identity_map_is_symplectic_and_scaling_is_not() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["run", "sympcheck", "--map", "identity"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(verdict(dir.path(), "sympcheck")["max_residual"].as_f64().unwrap() <= 1e-6);
    let o = symplab(dir.path(), &["sympcheck", "--map", "scaling"]);
    assert_eq!(o.status.code(), Some(1));
    let v = verdict(dir.path(), "sympcheck");
    assert!((v["max_residual"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(v["verdict"], "not symplectic");
}

#[test]
fn violated_hypothesis_demo_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["run", "prop6", "--violate-c2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(verdict(dir.path(), "prop6")["verdict"], "hypothesis violated, no convergence");
}

#[test]
fn polar_bracket_summary_reports_unit_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["bracket", "--entry", "polterovich_polar", "--n", "4", "--order", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n=4: constant 0.99999"), "{}", stdout(&o));
    assert!(verdict(dir.path(), "bracket")["deviation"].as_f64().unwrap() <= 5e-3);
}

#[test]
fn remark2_bracket_hits_golden_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["bracket", "--entry", "remark2_cartesian", "--n", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdict(dir.path(), "bracket");
    assert!((v["c0_norm"].as_f64().unwrap() - 0.9557788247528526).abs() < 1e-3);
}

#[test]
fn zero_fields_give_zero_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["bracket", "--entry", "zero"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("bracket.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 441);
    assert!(values.iter().all(|&v| v == 0.0));
}

#[test]
fn cylinder_verdict_echoes_both_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["gallery", "--entry", "cylinder_heisenberg", "--n", "1,4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdict(dir.path(), "gallery");
    assert_eq!(v["stated_constant"].as_f64(), Some(2.0));
    assert_eq!(v["derived_constant"].as_f64(), Some(0.5));
    assert_eq!(v["verdict"], "noncompact_caveat");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = symplab(dir.path(), &["defect", "--entry", "remark2_cartesian", "--n", "1,4", "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["defect.csv", "defect_verdict.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"map": "shear"}"#).unwrap();
    let o = symplab(dir.path(), &["sympcheck", "--map", "scaling", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(verdict(dir.path(), "sympcheck")["map"], "shear");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"unknown_field": 1}"#).unwrap();
    assert_eq!(symplab(dir.path(), &["defect", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(symplab(dir.path(), &["defect", "--n", "4,1"]).status.code(), Some(2));
    assert_eq!(symplab(dir.path(), &["gallery", "--entry", "nope"]).status.code(), Some(2));
    assert_eq!(symplab(dir.path(), &["run", "nope"]).status.code(), Some(2));
    assert_eq!(symplab(dir.path(), &["defect", "--n", "x"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // The radial drift carries the trajectory past the chart's outer radius.
    let o = symplab(dir.path(), &["flow", "--entry", "polterovich_polar", "--n", "64", "--start", "0.06,0", "--t", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn golden_regeneration_reproduces_and_detects_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = symplab(dir.path(), &["golden"]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdict(dir.path(), "golden");
    assert_eq!(v["compared_with_reference"], true);
    assert_eq!(v["constants"]["cylinder_kappa"].as_f64(), Some(0.5));

    let table = dir.path().join("table.json");
    let mut stored: Value = serde_json::from_str(include_str!("../../core/golden/constants.json")).unwrap();
    stored["constants"]["tail_bound_spot"] = Value::from(1.0);
    std::fs::write(&table, serde_json::to_string(&stored).unwrap()).unwrap();
    let o = symplab(dir.path(), &["golden", "--golden-file", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    // New parameters are recorded in the header rather than compared.
    let fresh = dir.path().join("fresh.json");
    let o = symplab(dir.path(), &["golden", "--chi-radius", "2", "--golden-file", fresh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&fresh).unwrap()).unwrap();
    assert_eq!(written["header"]["parameters"]["chi_radius"].as_f64(), Some(2.0));
}

#[test]
fn commutator_cases_agree_with_generator() {
    let dir = tempfile::tempdir().unwrap();
    for case in ["translations", "disjoint_bumps"] {
        let o = symplab(dir.path(), &["commutator", "--entry", case]);
        assert_eq!(o.status.code(), Some(0), "{case}");
        assert!(verdict(dir.path(), "commutator")["report"]["max_discrepancy"].as_f64().unwrap() <= 1e-4);
    }
}
