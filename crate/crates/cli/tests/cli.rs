use std::fs;
use std::process::{Command, Output};

use resil_core::io::{parse_model, parse_result};
use resil_core::numeric::rat;
use resil_core::qp::QuadraticProgram;

fn resil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resil")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn writes_result_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let o = resil(&["evaluate", "--model", "FIG6R", "--strategy", "all-a", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc = parse_result(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((doc.transient.as_str(), doc.frequency.as_str()), ("3", "0"));
    assert_eq!(doc.case.as_deref(), Some("finite"));
}

#[test]
fn exit_codes_and_error_documents() {
    let usage = resil(&["evaluate", "--model", "FIG4"]);
    assert_eq!(usage.status.code(), Some(1));
    let unknown_action = resil(&["evaluate", "--model", "FIG4", "--strategy", "all-zz"]);
    assert_eq!(unknown_action.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&unknown_action.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    let budget = resil(&["synthesize", "--model", "FIG6L", "--semantics", "expected", "--budget", "1"]);
    assert_eq!(budget.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&budget.stderr).unwrap();
    assert_eq!(err["error"], "budget-exceeded");

    let env_budget = Command::new(env!("CARGO_BIN_EXE_resil"))
        .args(["synthesize", "--model", "FIG6L"])
        .env("RESIL_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(env_budget.status.code(), Some(2));
}

#[test]
fn reads_models_and_strategies_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let strategy = dir.path().join("strategy.json");
    fs::write(&model, stdout(&resil(&["fixtures", "--name", "FIG4"]))).unwrap();
    fs::write(&strategy, r#"{"s0": "a", "s1": {"a": "1"}}"#).unwrap();
    let m = model.to_str().unwrap();
    let missing_objective = resil(&["evaluate", "--model", m, "--strategy", strategy.to_str().unwrap()]);
    assert_eq!(missing_objective.status.code(), Some(1));
    let o = resil(&["evaluate", "--model", m, "--strategy", strategy.to_str().unwrap(), "--objective", "reach:G:>2/5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(parse_result(&stdout(&o)).unwrap().transient, "2");
}

#[test]
fn transforms_print_valid_models() {
    for kind in ["unfold", "gadget", "stopping", "binarize", "product", "sinks"] {
        let o = resil(&["transform", "--model", "FIG4", "--kind", kind, "--k", "2"]);
        assert_eq!(o.status.code(), Some(0), "{kind}");
        parse_model(&stdout(&o)).unwrap_or_else(|e| panic!("{kind}: {e}"));
    }
    let induced = resil(&["transform", "--model", "FIG4", "--kind", "induced", "--strategy", "default"]);
    let m = parse_model(&stdout(&induced)).unwrap();
    assert!(m.player1_states().all(|s| m.normal(s).len() == 1));
}

#[test]
fn oracle_agrees_with_evaluation() {
    let o = resil(&["oracle", "--model", "FIG6R", "--strategy", "all-a", "--k", "4"]);
    assert_eq!(parse_result(&stdout(&o)).unwrap().transient, "3");
    let enumerated = resil(&["oracle", "--model", "FIG6L", "--memory", "1"]);
    assert_eq!(parse_result(&stdout(&enumerated)).unwrap().transient, "2");
    let lemmas = resil(&["oracle", "--model", "FIG4", "--lemmas", "--trials", "5", "--seed", "3"]);
    let report: serde_json::Value = serde_json::from_slice(&lemmas.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 3);
}

#[test]
fn emitted_programs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("levels.qp");
    let o = resil(&["synthesize", "--model", "FIG6L", "--k", "4", "--emit-qp", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = parse_result(&stdout(&o)).unwrap();
    assert!(doc.diagnostics.iter().filter(|d| d.contains("feasible and objective zero")).count() == 3);
    let text = fs::read_to_string(&path).unwrap();
    let programs: Vec<QuadraticProgram> = text.split("\n\n").filter(|t| !t.trim().is_empty()).map(|t| QuadraticProgram::parse(t).unwrap()).collect();
    assert_eq!(programs.iter().map(|q| q.level).collect::<Vec<_>>(), [0, 1, 2]);
    assert!(programs[0].objective_value(&vec![rat(0, 1); programs[0].variables.len()]) >= rat(0, 1));
}

#[test]
fn dumps_linear_programs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lps.txt");
    let o = resil(&["evaluate", "--model", "FIG4", "--strategy", "default", "--dump-lp", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("Minimize") && text.contains("End"));
}
