use std::path::PathBuf;
use std::process::Command;

use dor_core::session::NamedPlan;
use dor_core::{CardRanking, Plan, PlanningInstance, RegressionResult, ScoreTable};
use jsonschema::{Retrieve, Uri, Validator};
use serde_json::{json, Value};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(rel: &str) -> Value {
    let text = std::fs::read_to_string(root().join(rel)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Resolves schema references to the files under `schemas/`.
struct SchemaDir;

impl Retrieve for SchemaDir {
    fn retrieve(&self, uri: &Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let file = uri.as_str().rsplit('/').next().unwrap_or_default();
        let text = std::fs::read_to_string(root().join("schemas").join(file))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn validator(reference: &str) -> Validator {
    jsonschema::options()
        .with_retriever(SchemaDir)
        .build(&json!({ "$ref": reference }))
        .unwrap()
}

fn assert_valid(reference: &str, v: &Value) {
    let errors: Vec<String> = validator(reference)
        .iter_errors(v)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{reference}: {errors:#?}");
}

fn dor_json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let o = Command::new(env!("CARGO_BIN_EXE_dor")).args(&all).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn fx(name: &str) -> String {
    root().join("fixtures").join(name).to_string_lossy().into_owned()
}

#[test]
fn fixtures_match_input_schemas() {
    let eco = load("fixtures/ecovillage.json");
    assert_valid("instance.schema.json", &eco);
    for r in ["R50", "R100"] {
        assert_valid("ranking.schema.json", &load(&format!("fixtures/case-study/{r}.json")));
    }
    for g in 1..=3 {
        assert_valid(
            "scenarios.schema.json",
            &load(&format!("fixtures/case-study/scenarios-{g}.json")),
        );
    }
    assert_valid(
        "plan.schema.json#/$defs/named-plans",
        &load("fixtures/ecovillage-iteration1.json"),
    );
}

#[test]
fn schema_rejects_what_the_parser_rejects() {
    let mut eco = load("fixtures/ecovillage.json");
    eco["budgets"]["B1"][0] = json!("100,000.00");
    assert!(!validator("instance.schema.json").is_valid(&eco));
    assert!(PlanningInstance::from_json(&eco.to_string()).is_err());

    let mut eco = load("fixtures/ecovillage.json");
    eco["facilities"][0]["colour"] = json!("red");
    assert!(!validator("instance.schema.json").is_valid(&eco));
    assert!(PlanningInstance::from_json(&eco.to_string()).is_err());

    let empty = json!({"classes": [["a"], []], "blanks": [0]});
    assert!(!validator("ranking.schema.json").is_valid(&empty));
}

#[test]
fn instance_round_trips_through_its_schema() {
    let eco = load("fixtures/ecovillage.json");
    let inst = PlanningInstance::from_json(&eco.to_string()).unwrap();
    let back = serde_json::to_value(inst.to_file()).unwrap();
    assert_valid("instance.schema.json", &back);
    assert_eq!(PlanningInstance::from_json(&back.to_string()).unwrap(), inst);
}

#[test]
fn solve_output_matches_schema() {
    let v = dor_json(&["solve", &fx("ecovillage.json"), "--budget", "B2", "--objective", "w3"]);
    assert_valid("plan.schema.json#/$defs/solve-output", &v);
    let plan: Plan = serde_json::from_value(v["plan"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&plan).unwrap(), v["plan"]);
}

#[test]
fn score_output_matches_schema() {
    let v = dor_json(&["score", &fx("case-study/R100.json")]);
    assert_valid("scores.schema.json", &v);
    let table: ScoreTable = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(serde_json::to_value(&table).unwrap(), v);

    let r: CardRanking = serde_json::from_value(load("fixtures/case-study/R100.json")).unwrap();
    assert_valid("ranking.schema.json", &serde_json::to_value(&r).unwrap());
}

#[test]
fn fit_outputs_match_schema() {
    for family in ["ws", "piecewise", "choquet"] {
        let v = dor_json(&["fit", "--family", family, "--normalize", "min-max", &fx("didactic.json")]);
        assert_valid("regression.schema.json", &v);
        let r: RegressionResult = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(serde_json::to_value(&r).unwrap(), v);
    }
}

#[test]
fn exported_plans_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("s.jsonl");
    let log = log.to_str().unwrap();
    for args in [["init", &fx("ecovillage.json")], ["import", &fx("ecovillage-iteration1.json")]] {
        let o = Command::new(env!("CARGO_BIN_EXE_dor"))
            .args(["session", "--log", log])
            .args(args)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    let v = dor_json(&["session", "--log", log, "export", "--iteration", "1", "--format", "json"]);
    assert_eq!(v.as_array().unwrap().len(), 8);
    for entry in v.as_array().unwrap() {
        assert_valid("plan.schema.json", &entry["plan"]);
        let named: NamedPlan = serde_json::from_value(json!({"id": entry["id"], "plan": entry["plan"]})).unwrap();
        assert_eq!(serde_json::to_value(&named.plan).unwrap(), entry["plan"]);
    }
}
