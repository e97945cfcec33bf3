mod common;

use common::*;
use dor_core::capacity::Capacity2Additive;
use dor_core::objective::ObjectiveSpec;
use dor_core::plan::{Assignment, Plan};
use dor_core::spacetime::{
    assemble, check_feasible, cumulative_spend, evaluate_plan, optimize, ObjectiveRef, ScenarioSpec, SpaceTimeError,
};
use dor_core::{Cents, PlanningInstance};
use dor_lp::Status;

fn tiny(budget: &str, synergy: bool) -> PlanningInstance {
    let syn = if synergy {
        r#"[{"id": "s", "a": {"facility": "A", "location": "l1"}, "b": {"facility": "B", "location": "l1"}, "boost": 0.5}]"#
    } else {
        "[]"
    };
    PlanningInstance::from_json(&format!(
        r#"{{
        "criteria": [{{"id": "x"}}, {{"id": "y"}}],
        "periods": 3,
        "discount": {{"base": 1.1}},
        "budgets": {{"B": ["{budget}", "{budget}", "{budget}"]}},
        "facilities": [
            {{"id": "A", "locations": [{{"id": "l1", "cost": "10.00", "evaluations": {{"x": 10, "y": 2}}}}]}},
            {{"id": "B", "locations": [{{"id": "l1", "cost": "10.00", "evaluations": {{"x": 1, "y": 8}}}}]}}
        ],
        "synergies": {syn},
        "objectives": {{"w": {{"kind": "weighted-sum", "weights": [0.5, 0.5]}}}}
    }}"#
    ))
    .unwrap()
}

fn named(id: &str, budget: &str, objective: &str) -> ScenarioSpec {
    ScenarioSpec::new(id, budget, ObjectiveRef::Named(objective.into()), true)
}

#[test]
fn zero_budget_gives_empty_plan() {
    let inst = tiny("0.00", true);
    let out = optimize(&inst, &named("z", "B", "w")).unwrap();
    assert_eq!(out.status, Status::Optimal);
    assert!(out.plan.unwrap().assignments.is_empty());
    assert_eq!(out.value.unwrap(), 0.0);
}

#[test]
fn single_affordable_facility_opens_first() {
    let inst = tiny("10.00", false);
    let plan = optimize(&inst, &named("one", "B", "w")).unwrap().plan.unwrap();
    // Budget is cumulative, so the second facility opens one period later.
    assert_eq!(plan.assignments, vec![Assignment::new("A", "l1", 0), Assignment::new("B", "l1", 1)]);
    let tight = tiny("5.00", false);
    let out = optimize(&tight, &named("one", "B", "w")).unwrap();
    assert_eq!(out.plan.unwrap().assignments, vec![Assignment::new("A", "l1", 1)]);
    // Value accrues from the period after opening.
    assert!((out.value.unwrap() - 6.0 / 1.21).abs() < 1e-12);
}

#[test]
fn weighted_sum_without_synergy_has_no_linking_variables() {
    let inst = tiny("100.00", false);
    let (lp, layout) = assemble(&inst, &named("w", "B", "w")).unwrap();
    assert!(layout.gamma.is_empty());
    assert!(layout.syn.is_none());
    assert!(layout.g.is_empty() && layout.min_terms.is_empty() && layout.selectors.is_empty());
    assert_eq!(lp.num_vars(), 6);

    let inst = tiny("100.00", true);
    let (_, layout) = assemble(&inst, &named("w", "B", "w")).unwrap();
    assert_eq!(layout.gamma.len(), 1);
    assert_eq!(layout.gamma[0].len(), 3);
    let mut off = named("w", "B", "w");
    off.synergy = false;
    let (_, layout) = assemble(&inst, &off).unwrap();
    assert!(layout.gamma.is_empty());
}

#[test]
fn negative_interaction_gets_one_selector_and_takes_the_minimum() {
    let inst = tiny("100.00", false);
    let cap = Capacity2Additive {
        singletons: vec![0.6, 0.6],
        pairs: vec![-0.2],
        bonus: vec![],
    };
    cap.validate(1e-12).unwrap();
    let spec = ObjectiveSpec::Choquet {
        capacity: cap.clone(),
        normalization: None,
    };
    let sc = ScenarioSpec::new("c", "B", ObjectiveRef::Inline(spec), false);
    let (_, layout) = assemble(&inst, &sc).unwrap();
    assert_eq!(layout.selectors.len(), 1);
    assert_eq!(layout.min_terms.len(), 1);
    let out = optimize(&inst, &sc).unwrap();
    let plan = out.plan.unwrap();
    let value = evaluate_plan(&inst, &sc, &plan).unwrap();
    assert!((out.value.unwrap() - value).abs() < 1e-9);
    let (best, _) = enumerate_best(&inst, &sc).unwrap();
    assert!((value - best).abs() < 1e-9);
}

#[test]
fn ecovillage_model_size() {
    let inst = ecovillage();
    let (lp, layout) = assemble(&inst, &named("b1w1", "B1", "w1")).unwrap();
    let binaries: usize = layout.x.iter().flatten().map(Vec::len).sum();
    assert_eq!(binaries, 80);
    assert_eq!(layout.gamma.len(), 4);
    let text = dor_lp::lp_format::to_lp_string(&lp);
    assert!(text.starts_with("\\") || text.contains("Maximize") || text.contains("maximize"));
    assert!(text.contains("Binar") || text.contains("binar"));
}

#[test]
fn first_designed_plan_spend() {
    let inst = ecovillage();
    let plans = designed_plans();
    let spend = cumulative_spend(&inst, &plans["x1"]).unwrap();
    let want: Vec<Cents> = ["73730.00", "159850.00", "159850.00", "372025.00"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(spend, want);
    for (id, plan) in &plans {
        let sc = named(id, "B1", "w1");
        assert!(check_feasible(&inst, &sc, plan).unwrap().is_empty(), "{id}");
    }
}

#[test]
fn violations_are_reported_by_family() {
    let inst = ecovillage();
    let sc = named("v", "B2", "w1");
    let twice = Plan::manual(vec![Assignment::new("KIT-GUE", "l1", 0), Assignment::new("KIT-GUE", "l2", 1)]);
    let v = check_feasible(&inst, &sc, &twice).unwrap();
    assert!(v.iter().any(|v| v.family == "activation" && v.entities.iter().all(|e| e.starts_with("KIT-GUE@"))), "{v:?}");

    let clash = Plan::manual(vec![Assignment::new("RES-WWO", "l1", 0), Assignment::new("ROM-GUE", "l1", 3)]);
    let v = check_feasible(&inst, &sc, &clash).unwrap();
    assert!(v.iter().any(|v| v.family == "exclusion"), "{v:?}");

    let x1 = &designed_plans()["x1"];
    let v = check_feasible(&inst, &sc, x1).unwrap();
    let budget: Vec<_> = v.iter().filter(|v| v.family == "budget").collect();
    assert!(!budget.is_empty());
    assert!(budget.iter().all(|v| v.slack > 0.0));
}

#[test]
fn unknown_references_are_errors() {
    let inst = ecovillage();
    assert!(matches!(
        optimize(&inst, &named("a", "B9", "w1")),
        Err(SpaceTimeError::UnknownBudget(_))
    ));
    assert!(matches!(
        optimize(&inst, &named("a", "B1", "w9")),
        Err(SpaceTimeError::UnknownObjective(_))
    ));
    let bad = Plan::manual(vec![Assignment::new("KIT-GUE", "l1", 9)]);
    let found = match check_feasible(&inst, &named("a", "B1", "w1"), &bad) {
        Err(_) => true,
        Ok(v) => v.iter().any(|v| v.family == "reference"),
    };
    assert!(found);
}

#[test]
fn optimum_dominates_designed_plans() {
    let inst = ecovillage();
    let sc = named("b1w1", "B1", "w1");
    let out = optimize(&inst, &sc).unwrap();
    let best = out.value.unwrap();
    let plan = out.plan.unwrap();
    assert!(check_feasible(&inst, &sc, &plan).unwrap().is_empty());
    for (id, p) in designed_plans() {
        assert!(evaluate_plan(&inst, &sc, &p).unwrap() <= best + 1e-9, "{id}");
    }
}
