mod common;

use common::*;
use dor_core::{Cents, PlanningInstance};
use serde_json::{json, Value};

fn base() -> Value {
    serde_json::to_value(ecovillage().to_file()).unwrap()
}

fn paths(v: &Value) -> Vec<String> {
    match PlanningInstance::from_json(&v.to_string()) {
        Ok(_) => vec![],
        Err(e) => e.0.into_iter().map(|d| d.path).collect(),
    }
}

#[test]
fn fixture_round_trips() {
    let inst = ecovillage();
    assert_eq!(inst.facilities.len(), 10);
    assert_eq!(inst.periods(), 4);
    assert_eq!(inst.criteria_count(), 4);
    assert_eq!(inst.synergies.len(), 4);
    assert_eq!(inst.budget("B1").unwrap(), &[Cents::from_units(100_000); 4]);
    let text = serde_json::to_string(&inst.to_file()).unwrap();
    assert_eq!(PlanningInstance::from_json(&text).unwrap(), inst);
}

#[test]
fn every_problem_is_reported() {
    let mut v = base();
    v["facilities"][0]["locations"][0]["evaluations"]["env"] = json!(-1.0);
    v["facilities"][1]["locations"][1]["evaluations"]
        .as_object_mut()
        .unwrap()
        .remove("soc");
    v["facilities"][2]["locations"][0]["cost"] = json!("-5.00");
    v["budgets"]["B2"] = json!(["1.00", "1.00"]);
    v["exclusions"][0]["a"]["facility"] = json!("NOPE");
    v["synergies"][0]["boost"] = json!(-0.5);
    v["precedences"] = json!([{"earlier": "KIT-GUE", "later": "KIT-GUE"}]);
    let got = paths(&v);
    for want in [
        "facilities[0].locations[0].evaluations.env",
        "facilities[1].locations[1].evaluations.soc",
        "facilities[2].locations[0].cost",
        "budgets.B2",
        "exclusions[0].a.facility",
        "synergies[0].boost",
        "precedences[0]",
    ] {
        assert!(got.iter().any(|p| p == want), "{want} missing from {got:?}");
    }
}

#[test]
fn structural_errors_carry_a_json_path() {
    let mut v = base();
    v["facilities"][3]["locations"][0]["cost"] = json!("12.345");
    let got = paths(&v);
    assert_eq!(got.len(), 1);
    assert!(got[0].starts_with("facilities[3].locations[0].cost"), "{got:?}");

    let mut v = base();
    v["facilities"][0]["colour"] = json!("red");
    let e = PlanningInstance::from_json(&v.to_string()).unwrap_err();
    assert!(e.0[0].message.contains("colour"));
}

#[test]
fn duplicates_are_rejected() {
    let mut v = base();
    let first = v["facilities"][0].clone();
    v["facilities"].as_array_mut().unwrap().push(first);
    v["criteria"].as_array_mut().unwrap().push(json!({"id": "env"}));
    let e = PlanningInstance::from_json(&v.to_string()).unwrap_err();
    let text = e.to_string();
    assert!(text.contains("duplicate facility 'RES-WWO'"), "{text}");
    assert!(text.contains("duplicate criterion 'env'"), "{text}");
}

#[test]
fn discount_factors_are_checked() {
    let mut v = base();
    v["discount"] = json!([1.0, 0.9, 0.95, 0.8]);
    assert_eq!(paths(&v), ["discount[2]"]);
    v["discount"] = json!([1.0, 0.9]);
    assert_eq!(paths(&v), ["discount"]);
    v["discount"] = json!({"base": 0.5});
    assert_eq!(paths(&v), ["discount.base"]);
    v["discount"] = json!([1.0, 0.9, 0.8, 0.7]);
    let inst = PlanningInstance::from_json(&v.to_string()).unwrap();
    assert!((inst.discount_tail(1) - (0.9 + 0.8 + 0.7)).abs() < 1e-12);
}

#[test]
fn objectives_are_validated_against_the_criteria() {
    let mut v = base();
    v["objectives"]["bad"] = json!({"kind": "weighted-sum", "weights": [0.5, 0.5]});
    assert_eq!(paths(&v), ["objectives.bad"]);
}

#[test]
fn money_parses_exactly() {
    let c: Cents = "372025.00".parse().unwrap();
    assert_eq!(c.0, 37_202_500);
    assert_eq!(c.to_string(), "372025.00");
    assert!("1.2.3".parse::<Cents>().is_err());
    assert!("0.001".parse::<Cents>().is_err());
}
