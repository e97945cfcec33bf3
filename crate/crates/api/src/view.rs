//! Read-only projections of a session for the UI.

use std::collections::BTreeMap;

use dor_core::plan::period_breakdown;
use dor_core::session::{Iteration, PlanEntry, Session, SessionStatus};
use dor_core::spacetime::cumulative_spend;
use dor_core::{Assignment, Cents, ScoreTable};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: SessionStatus,
    pub accepted: Option<String>,
    pub criteria: Vec<String>,
    pub objectives: Vec<String>,
    pub iterations: Vec<IterationView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationView {
    pub number: usize,
    /// The decision maker still has to rank this iteration's plans.
    pub pending_ranking: bool,
    pub scenarios: Vec<String>,
    pub infeasible: Vec<InfeasibleView>,
    pub presented: Vec<String>,
    pub plans: Vec<PlanView>,
    pub rankings: BTreeMap<String, ScoreTable>,
    pub fits: BTreeMap<String, FitSummary>,
    pub comments: Vec<CommentView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleView {
    pub scenario: String,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanView {
    pub id: String,
    pub provenance: Vec<String>,
    pub assignments: Vec<Assignment>,
    /// Objective value under each scenario that produced the plan.
    pub values: BTreeMap<String, f64>,
    /// Criterion id to discounted contribution.
    pub contributions: BTreeMap<String, f64>,
    pub synergy: bool,
    pub periods: Vec<PeriodView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodView {
    pub period: usize,
    pub spend: Cents,
    pub cumulative_spend: Cents,
    /// Contribution increments earned in this period.
    pub contributions: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub family: String,
    pub total_error: f64,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommentView {
    pub plan: Option<String>,
    pub text: String,
}

pub fn session_view(id: &str, s: &Session) -> Result<SessionView, ApiError> {
    let last = s.iterations.last().map(|it| it.number);
    let iterations = s
        .iterations
        .iter()
        .map(|it| {
            let pending = s.status != SessionStatus::Converged
                && Some(it.number) == last
                && !it.plans.is_empty()
                && it.rankings.is_empty();
            iteration_view(s, it, pending)
        })
        .collect::<Result<_, _>>()?;
    Ok(SessionView {
        id: id.to_string(),
        status: s.status,
        accepted: s.accepted.clone(),
        criteria: s.instance.criteria.iter().map(|c| c.id.clone()).collect(),
        objectives: s.objectives.keys().cloned().collect(),
        iterations,
    })
}

pub fn iteration_view(s: &Session, it: &Iteration, pending_ranking: bool) -> Result<IterationView, ApiError> {
    Ok(IterationView {
        number: it.number,
        pending_ranking,
        scenarios: it.scenarios.iter().map(|sc| sc.id.clone()).collect(),
        infeasible: it
            .infeasible
            .iter()
            .map(|(scenario, status)| InfeasibleView {
                scenario: scenario.clone(),
                status: status.clone(),
            })
            .collect(),
        presented: it.presented().iter().map(|p| p.id.clone()).collect(),
        plans: it.plans.iter().map(|p| plan_view(s, p)).collect::<Result<_, _>>()?,
        rankings: it
            .rankings
            .iter()
            .map(|(name, r)| (name.clone(), r.scores.clone()))
            .collect(),
        fits: it
            .fits
            .iter()
            .map(|(name, r)| {
                let family = serde_json::to_value(r.family()).expect("families serialize");
                let summary = FitSummary {
                    family: family.as_str().unwrap_or_default().to_string(),
                    total_error: r.total_error,
                    k: r.k,
                };
                (name.clone(), summary)
            })
            .collect(),
        comments: it
            .comments
            .iter()
            .map(|c| CommentView {
                plan: c.plan.clone(),
                text: c.text.clone(),
            })
            .collect(),
    })
}

fn by_criterion(s: &Session, values: &[f64]) -> BTreeMap<String, f64> {
    s.instance
        .criteria
        .iter()
        .zip(values)
        .map(|(c, v)| (c.id.clone(), *v))
        .collect()
}

fn plan_view(s: &Session, p: &PlanEntry) -> Result<PlanView, ApiError> {
    let inst = &s.instance;
    let model = |e: dor_core::ModelError| ApiError::internal(format!("plan {}: {e}", p.id));
    let breakdown = period_breakdown(inst, &p.plan).map_err(model)?;
    let cumulative = cumulative_spend(inst, &p.plan).map_err(model)?;
    let periods = breakdown
        .per_criterion
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let before = if t == 0 { 0 } else { cumulative[t - 1].0 };
            PeriodView {
                period: t,
                spend: Cents(cumulative[t].0 - before),
                cumulative_spend: cumulative[t],
                contributions: by_criterion(s, row),
            }
        })
        .collect();
    Ok(PlanView {
        id: p.id.clone(),
        provenance: p.plan.provenance.clone(),
        assignments: p.plan.assignments.clone(),
        values: p.values.clone(),
        contributions: by_criterion(s, &p.contributions.values),
        synergy: p.contributions.syn,
        periods,
    })
}
