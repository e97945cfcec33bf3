//! The space-time facility planning MILP: which facility, where, and when.
//!
//! Binary `x[i,l,t]` activates facility `i` at location `l` in period `t`.
//! An activation at `τ` accrues `v(t)·y` for every `t > τ`; a realized
//! synergy adds `v(t)·σ·(y_a + y_b)` for every `t ≥ 1` by which both
//! anchors are active.

use std::collections::BTreeSet;

use dor_lp::{solve_milp, LinearProgram, Relation, Sense, SolveReport, SolverConfig, Status, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::pairs;
use crate::instance::{Placement, PlacementRef, PlanningInstance};
use crate::money::Cents;
use crate::objective::{ObjectiveError, ObjectiveSpec};
use crate::plan::{contribution_of, Activation, ModelError, Plan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceTimeError {
    #[error("unknown budget schedule '{0}'")]
    UnknownBudget(String),
    #[error("unknown objective '{0}'")]
    UnknownObjective(String),
    #[error("budget schedule '{name}' has {got} periods, instance has {expected}")]
    BudgetLength { name: String, expected: usize, got: usize },
    #[error("budget schedule '{0}' has a negative entry")]
    NegativeBudget(String),
    #[error("unknown facility '{0}'")]
    UnknownFacility(String),
    #[error("unknown location '{location}' for facility '{facility}'")]
    UnknownLocation { facility: String, location: String },
    #[error("period {0} is outside the horizon")]
    PeriodOutOfRange(usize),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver rejected the model: {0}")]
    Solver(String),
    #[error("MILP objective {milp} disagrees with plan evaluation {evaluated}")]
    Inconsistent { milp: f64, evaluated: f64 },
}

/// A named objective from the instance catalog, or one given inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveRef {
    Named(String),
    Inline(ObjectiveSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExtraConstraint {
    /// At least one of the facilities is activated, by `by_period` if given.
    RequireAnyOf {
        facilities: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        by_period: Option<usize>,
    },
    /// `later` may only be activated after `earlier` has been.
    Precedence { earlier: String, later: String },
    /// The two placements are never both used.
    ForbidPair { a: PlacementRef, b: PlacementRef },
    /// A building hosting one activated facility hosts at least two.
    MinTwoPerBuilding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub budget: String,
    pub objective: ObjectiveRef,
    #[serde(default = "yes")]
    pub synergy: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ExtraConstraint>,
}

fn yes() -> bool {
    true
}

impl ScenarioSpec {
    pub fn new(id: impl Into<String>, budget: impl Into<String>, objective: ObjectiveRef, synergy: bool) -> Self {
        ScenarioSpec {
            id: id.into(),
            budget: budget.into(),
            objective,
            synergy,
            constraints: Vec::new(),
        }
    }
}

enum Resolved {
    RequireAnyOf(Vec<usize>, usize),
    Precedence(usize, usize),
    ForbidPair(Placement, Placement),
    MinTwoPerBuilding,
}

/// Scenario with every reference checked against the instance.
struct Context<'a> {
    inst: std::borrow::Cow<'a, PlanningInstance>,
    budget: Vec<Cents>,
    objective: ObjectiveSpec,
    extra: Vec<Resolved>,
}

fn resolve_ref(inst: &PlanningInstance, r: &PlacementRef) -> Result<Placement, SpaceTimeError> {
    let fi = inst
        .facility_index(&r.facility)
        .ok_or_else(|| SpaceTimeError::UnknownFacility(r.facility.clone()))?;
    inst.placement(&r.facility, &r.location)
        .filter(|p| p.facility == fi)
        .ok_or_else(|| SpaceTimeError::UnknownLocation {
            facility: r.facility.clone(),
            location: r.location.clone(),
        })
}

fn facility(inst: &PlanningInstance, id: &str) -> Result<usize, SpaceTimeError> {
    inst.facility_index(id)
        .ok_or_else(|| SpaceTimeError::UnknownFacility(id.to_string()))
}

fn resolve<'a>(inst: &'a PlanningInstance, sc: &ScenarioSpec) -> Result<Context<'a>, SpaceTimeError> {
    let budget = inst
        .budget(&sc.budget)
        .ok_or_else(|| SpaceTimeError::UnknownBudget(sc.budget.clone()))?
        .to_vec();
    if budget.len() != inst.periods() {
        return Err(SpaceTimeError::BudgetLength {
            name: sc.budget.clone(),
            expected: inst.periods(),
            got: budget.len(),
        });
    }
    if budget.iter().any(|b| b.0 < 0) {
        return Err(SpaceTimeError::NegativeBudget(sc.budget.clone()));
    }
    let objective = match &sc.objective {
        ObjectiveRef::Named(name) => inst
            .objectives
            .get(name)
            .cloned()
            .ok_or_else(|| SpaceTimeError::UnknownObjective(name.clone()))?,
        ObjectiveRef::Inline(spec) => spec.clone(),
    };
    objective.validate(inst.criteria_count())?;
    let mut extra = Vec::new();
    for c in &sc.constraints {
        extra.push(match c {
            ExtraConstraint::RequireAnyOf { facilities, by_period } => {
                let ids = facilities
                    .iter()
                    .map(|f| facility(inst, f))
                    .collect::<Result<Vec<_>, _>>()?;
                let by = by_period.unwrap_or(inst.last_period());
                if by > inst.last_period() {
                    return Err(SpaceTimeError::PeriodOutOfRange(by));
                }
                Resolved::RequireAnyOf(ids, by)
            }
            ExtraConstraint::Precedence { earlier, later } => {
                Resolved::Precedence(facility(inst, earlier)?, facility(inst, later)?)
            }
            ExtraConstraint::ForbidPair { a, b } => Resolved::ForbidPair(resolve_ref(inst, a)?, resolve_ref(inst, b)?),
            ExtraConstraint::MinTwoPerBuilding => Resolved::MinTwoPerBuilding,
        });
    }
    let inst = if sc.synergy {
        std::borrow::Cow::Borrowed(inst)
    } else {
        std::borrow::Cow::Owned(inst.without_synergies())
    };
    Ok(Context {
        inst,
        budget,
        objective,
        extra,
    })
}

/// Cost coefficients are in thousands of euros to keep the tableau well
/// scaled; feasibility is re-checked exactly in cents.
fn kilo_euros(c: Cents) -> f64 {
    c.0 as f64 / 100_000.0
}

/// Buildings and the placements that touch each of them.
fn building_members(inst: &PlanningInstance) -> Vec<(String, Vec<Placement>)> {
    let names: BTreeSet<&str> = inst
        .facilities
        .iter()
        .flat_map(|f| f.locations.iter().flat_map(|l| l.buildings.iter().map(String::as_str)))
        .collect();
    names
        .into_iter()
        .map(|b| {
            let mut members = Vec::new();
            for (fi, f) in inst.facilities.iter().enumerate() {
                for (li, l) in f.locations.iter().enumerate() {
                    if l.buildings.iter().any(|x| x == b) {
                        members.push(Placement {
                            facility: fi,
                            location: li,
                        });
                    }
                }
            }
            (b.to_string(), members)
        })
        .collect()
}

/// Variable handles of an assembled model.
#[derive(Clone, Debug)]
pub struct Layout {
    /// `x[facility][location][period]`.
    pub x: Vec<Vec<Vec<VarId>>>,
    /// `gamma[synergy][period]`.
    pub gamma: Vec<Vec<VarId>>,
    pub syn: Option<VarId>,
    /// Raw contribution per criterion; Choquet objectives only.
    pub g: Vec<VarId>,
    /// Min-term variable per criterion pair; Choquet objectives only.
    pub min_terms: Vec<VarId>,
    /// Big-M binaries for negative pair weights.
    pub selectors: Vec<VarId>,
}

/// Linear expression of `G_j` over the model variables.
fn contribution_terms(inst: &PlanningInstance, layout: &Layout, j: usize) -> Vec<(VarId, f64)> {
    let last = inst.last_period();
    let mut terms = Vec::new();
    for (fi, f) in inst.facilities.iter().enumerate() {
        for (li, loc) in f.locations.iter().enumerate() {
            for tau in 0..last {
                let c = inst.discount_tail(tau + 1) * loc.evaluations[j];
                if c != 0.0 {
                    terms.push((layout.x[fi][li][tau], c));
                }
            }
        }
    }
    for (r, s) in inst.synergies.iter().enumerate() {
        let y = inst.location(s.a).evaluations[j] + inst.location(s.b).evaluations[j];
        for t in 1..=last {
            let c = inst.discount[t] * s.boost * y;
            if c != 0.0 {
                terms.push((layout.gamma[r][t], c));
            }
        }
    }
    terms
}

/// Largest attainable `G_j`: every facility at its best location from
/// period 0, every synergy realized from period 1.
fn contribution_bound(inst: &PlanningInstance, j: usize) -> f64 {
    let tail = inst.discount_tail(1);
    let facilities: f64 = inst
        .facilities
        .iter()
        .map(|f| f.locations.iter().map(|l| l.evaluations[j].max(0.0)).fold(0.0, f64::max) * tail)
        .sum();
    let synergies: f64 = inst
        .synergies
        .iter()
        .map(|s| (s.boost * (inst.location(s.a).evaluations[j] + inst.location(s.b).evaluations[j])).max(0.0) * tail)
        .sum();
    facilities + synergies
}

fn assemble_context(ctx: &Context) -> (LinearProgram, Layout) {
    let inst = ctx.inst.as_ref();
    let periods = inst.periods();
    let last = inst.last_period();
    let m = inst.criteria_count();
    let mut lp = LinearProgram::new(Sense::Maximize).with_name(format!("spacetime_{}", inst.name));

    let x: Vec<Vec<Vec<VarId>>> = inst
        .facilities
        .iter()
        .map(|f| {
            f.locations
                .iter()
                .map(|l| {
                    (0..periods)
                        .map(|t| lp.add_binary(format!("x_{}_{}_t{t}", f.id, l.id)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let placed_by = |p: Placement, t: usize| -> Vec<(VarId, f64)> {
        (0..=t).map(|tau| (x[p.facility][p.location][tau], 1.0)).collect()
    };

    // Synergy indicators: gamma[r][t] = 1 iff both anchors are active by t.
    let mut gamma = Vec::with_capacity(inst.synergies.len());
    for s in &inst.synergies {
        let mut row = Vec::with_capacity(periods);
        for t in 0..periods {
            let g = lp.add_var(format!("gamma_{}_t{t}", s.id), 0.0, 1.0);
            let mut a = placed_by(s.a, t);
            a.push((g, -1.0));
            lp.add_constraint(format!("gamma_{}_t{t}_a", s.id), a, Relation::Ge, 0.0);
            let mut b = placed_by(s.b, t);
            b.push((g, -1.0));
            lp.add_constraint(format!("gamma_{}_t{t}_b", s.id), b, Relation::Ge, 0.0);
            let mut both = placed_by(s.a, t);
            both.extend(placed_by(s.b, t));
            both.push((g, -1.0));
            lp.add_constraint(format!("gamma_{}_t{t}_both", s.id), both, Relation::Le, 1.0);
            row.push(g);
        }
        gamma.push(row);
    }

    // Cumulative budget.
    let mut available = 0i64;
    for t in 0..periods {
        available += ctx.budget[t].0;
        let mut terms = Vec::new();
        for (fi, f) in inst.facilities.iter().enumerate() {
            for (li, l) in f.locations.iter().enumerate() {
                for tau in 0..=t {
                    terms.push((x[fi][li][tau], kilo_euros(l.cost)));
                }
            }
        }
        lp.add_constraint(format!("budget_t{t}"), terms, Relation::Le, kilo_euros(Cents(available)));
    }

    for (fi, f) in inst.facilities.iter().enumerate() {
        let terms = x[fi].iter().flatten().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(format!("activate_{}", f.id), terms, Relation::Le, 1.0);
    }

    let used = |p: Placement| -> Vec<(VarId, f64)> { x[p.facility][p.location].iter().map(|&v| (v, 1.0)).collect() };
    let pair_row = |lp: &mut LinearProgram, name: String, a: Placement, b: Placement| {
        let mut terms = used(a);
        terms.extend(used(b));
        lp.add_constraint(name, terms, Relation::Le, 1.0);
    };
    for (a, b) in &inst.exclusions {
        let name = format!("exclude_{}_{}", inst.placement_name(*a), inst.placement_name(*b));
        pair_row(&mut lp, name, *a, *b);
    }

    let precedence = |lp: &mut LinearProgram, earlier: usize, later: usize| {
        let (e, l) = (&inst.facilities[earlier], &inst.facilities[later]);
        for li in 0..l.locations.len() {
            for t in 0..periods {
                let mut terms = vec![(x[later][li][t], 1.0)];
                for el in 0..e.locations.len() {
                    for tau in 0..t {
                        terms.push((x[earlier][el][tau], -1.0));
                    }
                }
                lp.add_constraint(
                    format!("precede_{}_{}_{}_t{t}", e.id, l.id, l.locations[li].id),
                    terms,
                    Relation::Le,
                    0.0,
                );
            }
        }
    };
    for &(e, l) in &inst.precedences {
        precedence(&mut lp, e, l);
    }

    for (k, c) in ctx.extra.iter().enumerate() {
        match c {
            Resolved::RequireAnyOf(facilities, by) => {
                let mut terms = Vec::new();
                for &fi in facilities {
                    for loc in &x[fi] {
                        terms.extend(loc[..=*by].iter().map(|&v| (v, 1.0)));
                    }
                }
                lp.add_constraint(format!("require_any_{k}"), terms, Relation::Ge, 1.0);
            }
            Resolved::Precedence(e, l) => precedence(&mut lp, *e, *l),
            Resolved::ForbidPair(a, b) => pair_row(&mut lp, format!("forbid_{k}"), *a, *b),
            Resolved::MinTwoPerBuilding => {
                for (building, members) in building_members(inst) {
                    for p in &members {
                        let mut terms = used(*p);
                        for q in members.iter().filter(|q| q.facility != p.facility) {
                            terms.extend(used(*q).into_iter().map(|(v, _)| (v, -1.0)));
                        }
                        lp.add_constraint(
                            format!("two_in_{building}_{}", inst.placement_name(*p)),
                            terms,
                            Relation::Le,
                            0.0,
                        );
                    }
                }
            }
        }
    }

    let mut layout = Layout {
        x,
        gamma,
        syn: None,
        g: Vec::new(),
        min_terms: Vec::new(),
        selectors: Vec::new(),
    };

    let scale: Vec<(f64, f64)> = (0..m)
        .map(|j| ctx.objective.normalization().map_or((1.0, 0.0), |n| n.affine(j)))
        .collect();

    match &ctx.objective {
        ObjectiveSpec::WeightedSum { weights, .. } => {
            let mut offset = 0.0;
            for j in 0..m {
                let (a, b) = scale[j];
                offset += weights[j] * b;
                for (v, c) in contribution_terms(inst, &layout, j) {
                    lp.add_objective(v, weights[j] * a * c);
                }
            }
            lp.set_objective_offset(offset);
        }
        ObjectiveSpec::Choquet { capacity, .. } => {
            let mut offset = 0.0;
            let mut bounds = Vec::with_capacity(m);
            for j in 0..m {
                let (a, b) = scale[j];
                let ub = contribution_bound(inst, j);
                let g = lp.add_var(format!("g_{}", inst.criteria[j].id), 0.0, ub);
                let mut terms = contribution_terms(inst, &layout, j);
                terms.push((g, -1.0));
                lp.add_constraint(format!("define_g_{}", inst.criteria[j].id), terms, Relation::Eq, 0.0);
                lp.add_objective(g, capacity.singletons[j] * a);
                offset += capacity.singletons[j] * b;
                layout.g.push(g);
                bounds.push((b, a * ub + b));
            }
            for (p, (j, k)) in pairs(m).enumerate() {
                let w = capacity.pairs[p];
                let (lo, hi) = (bounds[j].0.min(bounds[k].0), bounds[j].1.max(bounds[k].1));
                let name = format!("{}_{}", inst.criteria[j].id, inst.criteria[k].id);
                let mv = lp.add_var(format!("min_{name}"), lo, hi);
                for (side, &c) in [j, k].iter().enumerate() {
                    let (a, b) = scale[c];
                    lp.add_constraint(
                        format!("min_{name}_le{side}"),
                        vec![(mv, 1.0), (layout.g[c], -a)],
                        Relation::Le,
                        b,
                    );
                }
                if w < 0.0 {
                    let big_m = hi - lo;
                    let sel = lp.add_binary(format!("pick_{name}"));
                    let (aj, bj) = scale[j];
                    let (ak, bk) = scale[k];
                    // m >= n_j - M s   and   m >= n_k - M (1 - s)
                    lp.add_constraint(
                        format!("min_{name}_ge0"),
                        vec![(mv, 1.0), (layout.g[j], -aj), (sel, big_m)],
                        Relation::Ge,
                        bj,
                    );
                    lp.add_constraint(
                        format!("min_{name}_ge1"),
                        vec![(mv, 1.0), (layout.g[k], -ak), (sel, -big_m)],
                        Relation::Ge,
                        bk - big_m,
                    );
                    layout.selectors.push(sel);
                }
                lp.add_objective(mv, w);
                layout.min_terms.push(mv);
            }
            if let Some(&bonus) = capacity.bonus.first() {
                let syn = lp.add_var("syn", 0.0, 1.0);
                let mut terms: Vec<(VarId, f64)> = layout.gamma.iter().map(|g| (g[last], -1.0)).collect();
                terms.push((syn, 1.0));
                lp.add_constraint("syn_any", terms, Relation::Le, 0.0);
                for (r, g) in layout.gamma.iter().enumerate() {
                    lp.add_constraint(format!("syn_ge_{r}"), vec![(syn, 1.0), (g[last], -1.0)], Relation::Ge, 0.0);
                }
                lp.add_objective(syn, bonus);
                layout.syn = Some(syn);
            }
            lp.set_objective_offset(offset);
        }
    }
    (lp, layout)
}

pub fn assemble(inst: &PlanningInstance, sc: &ScenarioSpec) -> Result<(LinearProgram, Layout), SpaceTimeError> {
    let ctx = resolve(inst, sc)?;
    Ok(assemble_context(&ctx))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: String,
    pub entities: Vec<String>,
    /// Amount by which the row is violated, in the row's own units
    /// (euros for budget rows, activation counts otherwise).
    pub slack: f64,
}

impl Violation {
    fn new(family: &str, entities: Vec<String>, slack: f64) -> Self {
        Violation {
            family: family.to_string(),
            entities,
            slack,
        }
    }
}

/// Cumulative spend at the end of each period.
pub fn cumulative_spend(inst: &PlanningInstance, plan: &Plan) -> Result<Vec<Cents>, ModelError> {
    let acts = plan.resolve(inst)?;
    let mut per = vec![0i64; inst.periods()];
    for a in &acts {
        per[a.period] += inst.location(a.placement).cost.0;
    }
    let mut total = 0;
    Ok(per
        .into_iter()
        .map(|c| {
            total += c;
            Cents(total)
        })
        .collect())
}

/// Every constraint the plan breaks under the scenario. Money is compared
/// exactly in cents.
pub fn check_feasible(
    inst: &PlanningInstance,
    sc: &ScenarioSpec,
    plan: &Plan,
) -> Result<Vec<Violation>, SpaceTimeError> {
    let ctx = resolve(inst, sc)?;
    let inst = ctx.inst.as_ref();
    let mut out = Vec::new();
    let mut acts = Vec::new();
    for a in &plan.assignments {
        match Plan::manual(vec![a.clone()]).resolve(inst) {
            Ok(r) => acts.extend(r),
            Err(e) => out.push(Violation::new("reference", vec![e.to_string()], 0.0)),
        }
    }

    let name = |a: &Activation| format!("{}@t{}", inst.placement_name(a.placement), a.period);

    let mut spent = 0i64;
    let mut available = 0i64;
    for t in 0..inst.periods() {
        available += ctx.budget[t].0;
        spent += acts
            .iter()
            .filter(|a| a.period == t)
            .map(|a| inst.location(a.placement).cost.0)
            .sum::<i64>();
        if spent > available {
            out.push(Violation::new(
                "budget",
                vec![format!("t{t}")],
                Cents(spent - available).as_units_f64(),
            ));
        }
    }

    for fi in 0..inst.facilities.len() {
        let mine: Vec<&Activation> = acts.iter().filter(|a| a.placement.facility == fi).collect();
        if mine.len() > 1 {
            out.push(Violation::new(
                "activation",
                mine.iter().map(|a| name(a)).collect(),
                (mine.len() - 1) as f64,
            ));
        }
    }

    let uses = |p: Placement| acts.iter().filter(|a| a.placement == p).count();
    let first = |fi: usize| acts.iter().filter(|a| a.placement.facility == fi).map(|a| a.period).min();
    for (a, b) in &inst.exclusions {
        let n = uses(*a) + uses(*b);
        if uses(*a) > 0 && uses(*b) > 0 {
            out.push(Violation::new(
                "exclusion",
                vec![inst.placement_name(*a), inst.placement_name(*b)],
                (n - 1) as f64,
            ));
        }
    }
    let check_precedence = |out: &mut Vec<Violation>, family: &str, e: usize, l: usize| {
        for a in acts.iter().filter(|a| a.placement.facility == l) {
            let ok = matches!(first(e), Some(te) if te < a.period);
            if !ok {
                out.push(Violation::new(
                    family,
                    vec![inst.facilities[e].id.clone(), name(a)],
                    1.0,
                ));
            }
        }
    };
    for &(e, l) in &inst.precedences {
        check_precedence(&mut out, "precedence", e, l);
    }
    for c in &ctx.extra {
        match c {
            Resolved::RequireAnyOf(facilities, by) => {
                let hit = acts
                    .iter()
                    .any(|a| facilities.contains(&a.placement.facility) && a.period <= *by);
                if !hit {
                    let mut entities: Vec<String> =
                        facilities.iter().map(|&f| inst.facilities[f].id.clone()).collect();
                    entities.push(format!("by t{by}"));
                    out.push(Violation::new("require-any-of", entities, 1.0));
                }
            }
            Resolved::Precedence(e, l) => check_precedence(&mut out, "precedence", *e, *l),
            Resolved::ForbidPair(a, b) => {
                if uses(*a) > 0 && uses(*b) > 0 {
                    out.push(Violation::new(
                        "forbid-pair",
                        vec![inst.placement_name(*a), inst.placement_name(*b)],
                        1.0,
                    ));
                }
            }
            Resolved::MinTwoPerBuilding => {
                for (building, members) in building_members(inst) {
                    let active: BTreeSet<usize> = acts
                        .iter()
                        .filter(|a| members.contains(&a.placement))
                        .map(|a| a.placement.facility)
                        .collect();
                    if active.len() == 1 {
                        let fi = *active.iter().next().unwrap();
                        out.push(Violation::new(
                            "min-two-per-building",
                            vec![building, inst.facilities[fi].id.clone()],
                            1.0,
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Status,
    /// Decoded incumbent; `None` unless the solve found a point.
    pub plan: Option<Plan>,
    /// Objective re-evaluated on the decoded plan.
    pub value: Option<f64>,
    pub report: SolveReport,
}

pub fn optimize(inst: &PlanningInstance, sc: &ScenarioSpec) -> Result<Outcome, SpaceTimeError> {
    optimize_with(inst, sc, &SolverConfig::default())
}

pub fn optimize_with(
    inst: &PlanningInstance,
    sc: &ScenarioSpec,
    config: &SolverConfig,
) -> Result<Outcome, SpaceTimeError> {
    let ctx = resolve(inst, sc)?;
    let (lp, layout) = assemble_context(&ctx);
    let report = solve_milp(&lp, config).map_err(|e| SpaceTimeError::Solver(e.to_string()))?;
    if report.values.is_empty() {
        return Ok(Outcome {
            status: report.status,
            plan: None,
            value: None,
            report,
        });
    }
    let inst_used = ctx.inst.as_ref();
    let mut acts = Vec::new();
    for (fi, locs) in layout.x.iter().enumerate() {
        for (li, ts) in locs.iter().enumerate() {
            for (t, v) in ts.iter().enumerate() {
                if report.values[v.index()] > 0.5 {
                    acts.push(Activation {
                        placement: Placement {
                            facility: fi,
                            location: li,
                        },
                        period: t,
                    });
                }
            }
        }
    }
    let mut plan = Plan::from_activations(inst_used, &acts);
    plan.provenance = vec![sc.id.clone()];
    let value = ctx.objective.evaluate(&contribution_of(inst_used, &acts))?;
    if report.status == Status::Optimal && (value - report.objective).abs() > 1e-6 {
        return Err(SpaceTimeError::Inconsistent {
            milp: report.objective,
            evaluated: value,
        });
    }
    Ok(Outcome {
        status: report.status,
        plan: Some(plan),
        value: Some(value),
        report,
    })
}

/// Objective value of a plan under the scenario's objective.
pub fn evaluate_plan(inst: &PlanningInstance, sc: &ScenarioSpec, plan: &Plan) -> Result<f64, SpaceTimeError> {
    let ctx = resolve(inst, sc)?;
    let acts = plan.resolve(ctx.inst.as_ref())?;
    Ok(ctx.objective.evaluate(&contribution_of(ctx.inst.as_ref(), &acts))?)
}
