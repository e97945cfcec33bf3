//! Iterative elicitation sessions backed by an append-only JSON-lines log.
//!
//! Each line is `{"event": .., "timestamp": .., "payload": ..}`. Events carry
//! both their inputs and the outputs computed when they were first applied;
//! [`Session::replay`] recomputes every output and insists on an exact match.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::{merge, score, CardRanking, DeckError, ScoreTable};
use crate::fit::{fit, Family, FitError, FitItem, FitRequest, NormalizationMode, RegressionResult, ScalingMode};
use crate::instance::{InstanceError, InstanceFile, PlanningInstance};
use crate::objective::ObjectiveSpec;
use crate::plan::{contribution, Contributions, ModelError, Plan};
use crate::spacetime::{check_feasible, optimize, ObjectiveRef, ScenarioSpec, SpaceTimeError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session log: {0}")]
    Io(#[from] std::io::Error),
    #[error("session log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("session log must start with a structuring event")]
    NotStructured,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("session is converged; no further changes are accepted")]
    Converged,
    #[error("unknown iteration {0}")]
    UnknownIteration(usize),
    #[error("unknown plan '{0}'")]
    UnknownPlan(String),
    #[error("plan id '{0}' is already in use")]
    DuplicatePlan(String),
    #[error("unknown ranking '{0}'")]
    UnknownRanking(String),
    #[error("unknown objective '{0}'")]
    UnknownObjective(String),
    #[error("a ranking needs exactly one of 'ranking' or 'merge'")]
    RankingInput,
    #[error("nothing to advance: no fit requests")]
    NothingToAdvance,
    #[error("{0} results cannot drive plan generation")]
    NotAnObjective(&'static str),
    #[error("generated plan {plan} violates its scenario: {detail}")]
    Infeasible { plan: String, detail: String },
    #[error("replay of event {index} ({event}) diverged: {detail}")]
    ReplayMismatch {
        index: usize,
        event: &'static str,
        detail: String,
    },
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    SpaceTime(#[from] SpaceTimeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    Structuring,
    AwaitingRanking,
    Fitted,
    Converged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPlan {
    pub id: String,
    pub plan: Plan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPlan {
    pub id: String,
    pub plan: Plan,
    /// Objective value under each scenario that produced the plan.
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerateOutcome {
    pub plans: Vec<GeneratedPlan>,
    /// Scenarios that produced no plan, with the solver status.
    pub infeasible: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeDirective {
    pub lower: String,
    pub upper: String,
    pub bridge: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankInput {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<CardRanking>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge: Option<MergeDirective>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    /// Ranking whose scores are fitted.
    pub ranking: String,
    pub family: Family,
    #[serde(default)]
    pub mode: ScalingMode,
    #[serde(default)]
    pub normalization: NormalizationMode,
    /// Adds the synergy flag as a standalone criterion.
    #[serde(default)]
    pub syn: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub total: f64,
    /// Catalog name for the fitted objective; defaults to `w<ranking>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
}

fn one() -> f64 {
    1.0
}

impl FitSpec {
    pub fn new(ranking: impl Into<String>, family: Family) -> Self {
        FitSpec {
            ranking: ranking.into(),
            family,
            mode: ScalingMode::Multiplicative,
            normalization: NormalizationMode::None,
            syn: false,
            breakpoints: Vec::new(),
            total: 1.0,
            objective: None,
        }
    }

    pub fn objective_name(&self) -> String {
        self.objective.clone().unwrap_or_else(|| format!("w{}", self.ranking))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "payload", rename_all = "kebab-case")]
pub enum EventBody {
    Structuring {
        instance: InstanceFile,
    },
    Generate {
        iteration: usize,
        scenarios: Vec<ScenarioSpec>,
        outcome: GenerateOutcome,
    },
    Import {
        iteration: usize,
        plans: Vec<NamedPlan>,
    },
    Curate {
        iteration: usize,
        keep: Vec<String>,
    },
    Rank {
        iteration: usize,
        input: RankInput,
        scores: ScoreTable,
    },
    Fit {
        iteration: usize,
        spec: FitSpec,
        result: RegressionResult,
    },
    Comment {
        iteration: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plan: Option<String>,
        text: String,
    },
    Accept {
        plan: String,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Structuring { .. } => "structuring",
            EventBody::Generate { .. } => "generate",
            EventBody::Import { .. } => "import",
            EventBody::Curate { .. } => "curate",
            EventBody::Rank { .. } => "rank",
            EventBody::Fit { .. } => "fit",
            EventBody::Comment { .. } => "comment",
            EventBody::Accept { .. } => "accept",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub timestamp: DateTime<Utc>,
    pub body: EventBody,
}

impl Event {
    pub fn to_line(&self) -> String {
        let mut value = serde_json::to_value(&self.body).expect("events serialize");
        let obj = value.as_object_mut().expect("adjacently tagged");
        obj.insert(
            "timestamp".into(),
            serde_json::Value::String(self.timestamp.to_rfc3339()),
        );
        serde_json::to_string(&value).expect("events serialize")
    }

    pub fn from_line(line: &str) -> Result<Event, String> {
        let mut value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let obj = value.as_object_mut().ok_or("event is not an object")?;
        let ts = obj
            .remove("timestamp")
            .ok_or("event has no timestamp")?;
        let timestamp: DateTime<Utc> = serde_json::from_value(ts).map_err(|e| format!("timestamp: {e}"))?;
        let body = serde_json::from_value(value).map_err(|e| e.to_string())?;
        Ok(Event { timestamp, body })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanEntry {
    pub id: String,
    pub plan: Plan,
    pub values: BTreeMap<String, f64>,
    pub contributions: Contributions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingEntry {
    pub ranking: CardRanking,
    pub scores: ScoreTable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommentEntry {
    pub plan: Option<String>,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Iteration {
    pub number: usize,
    pub scenarios: Vec<ScenarioSpec>,
    pub plans: Vec<PlanEntry>,
    pub infeasible: Vec<(String, String)>,
    /// Plans selected for the decision maker; `None` means all of them.
    pub curated: Option<Vec<String>>,
    pub rankings: BTreeMap<String, RankingEntry>,
    pub fits: BTreeMap<String, RegressionResult>,
    pub comments: Vec<CommentEntry>,
}

impl Iteration {
    pub fn presented(&self) -> Vec<&PlanEntry> {
        match &self.curated {
            Some(keep) => keep
                .iter()
                .filter_map(|id| self.plans.iter().find(|p| &p.id == id))
                .collect(),
            None => self.plans.iter().collect(),
        }
    }
}

#[derive(Debug)]
pub struct Session {
    pub instance: PlanningInstance,
    pub iterations: Vec<Iteration>,
    /// Objective catalog: the instance's own objectives plus fitted ones.
    pub objectives: BTreeMap<String, ObjectiveSpec>,
    pub status: SessionStatus,
    pub accepted: Option<String>,
    events: Vec<Event>,
    log: Option<PathBuf>,
}

impl Session {
    pub fn new(instance: PlanningInstance) -> Session {
        let file = instance.to_file();
        let mut s = Session::empty(instance);
        s.events.push(Event {
            timestamp: Utc::now(),
            body: EventBody::Structuring { instance: file },
        });
        s
    }

    fn empty(instance: PlanningInstance) -> Session {
        Session {
            objectives: instance.objectives.clone(),
            instance,
            iterations: Vec::new(),
            status: SessionStatus::Structuring,
            accepted: None,
            events: Vec::new(),
            log: None,
        }
    }

    /// Starts a session persisted at `path`; the file must not exist.
    pub fn create(path: impl AsRef<Path>, instance: PlanningInstance) -> Result<Session, SessionError> {
        let path = path.as_ref().to_path_buf();
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        let mut s = Session::new(instance);
        writeln!(f, "{}", s.events[0].to_line())?;
        f.sync_all()?;
        s.log = Some(path);
        Ok(s)
    }

    /// Loads and replays a persisted session.
    pub fn open(path: impl AsRef<Path>) -> Result<Session, SessionError> {
        let path = path.as_ref().to_path_buf();
        let events = read_log(&path)?;
        let mut s = Session::replay(events)?;
        s.log = Some(path);
        Ok(s)
    }

    /// Rebuilds a session by recomputing every event, failing on the first
    /// recorded output that differs from the recomputed one.
    pub fn replay(events: Vec<Event>) -> Result<Session, SessionError> {
        let mut it = events.into_iter();
        let first = it.next().ok_or(SessionError::NotStructured)?;
        let EventBody::Structuring { instance } = &first.body else {
            return Err(SessionError::NotStructured);
        };
        let mut s = Session::empty(PlanningInstance::try_from(instance.clone())?);
        s.events.push(first);
        for (i, ev) in it.enumerate() {
            let index = i + 1;
            let recomputed = s.apply(&ev.body)?;
            if recomputed != ev.body {
                return Err(SessionError::ReplayMismatch {
                    index,
                    event: ev.body.kind(),
                    detail: describe_mismatch(&ev.body, &recomputed),
                });
            }
            s.events.push(ev);
        }
        Ok(s)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_deref()
    }

    pub fn write_log(&self, path: impl AsRef<Path>) -> Result<(), SessionError> {
        let mut f = File::create(path)?;
        for e in &self.events {
            writeln!(f, "{}", e.to_line())?;
        }
        f.sync_all()?;
        Ok(())
    }

    fn record(&mut self, body: EventBody) -> Result<(), SessionError> {
        let ev = Event {
            timestamp: Utc::now(),
            body,
        };
        if let Some(path) = &self.log {
            let mut f = OpenOptions::new().append(true).open(path)?;
            writeln!(f, "{}", ev.to_line())?;
            f.sync_data()?;
        }
        self.events.push(ev);
        Ok(())
    }

    fn mutable(&self) -> Result<(), SessionError> {
        if self.status == SessionStatus::Converged {
            Err(SessionError::Converged)
        } else {
            Ok(())
        }
    }

    fn iteration_mut(&mut self, n: usize) -> Result<&mut Iteration, SessionError> {
        self.iterations
            .iter_mut()
            .find(|it| it.number == n)
            .ok_or(SessionError::UnknownIteration(n))
    }

    pub fn iteration(&self, n: usize) -> Result<&Iteration, SessionError> {
        self.iterations
            .iter()
            .find(|it| it.number == n)
            .ok_or(SessionError::UnknownIteration(n))
    }

    pub fn latest_iteration(&self) -> Option<&Iteration> {
        self.iterations.last()
    }

    pub fn find_plan(&self, id: &str) -> Option<&PlanEntry> {
        self.iterations.iter().flat_map(|it| &it.plans).find(|p| p.id == id)
    }

    /// Applies an event to the state and returns it with freshly computed
    /// outputs.
    fn apply(&mut self, body: &EventBody) -> Result<EventBody, SessionError> {
        self.mutable()?;
        match body {
            EventBody::Structuring { .. } => Err(SessionError::Parse {
                line: self.events.len() + 1,
                message: "structuring event after the first line".into(),
            }),
            EventBody::Generate { iteration, scenarios, .. } => {
                let outcome = self.run_generate(*iteration, scenarios)?;
                Ok(EventBody::Generate {
                    iteration: *iteration,
                    scenarios: scenarios.clone(),
                    outcome,
                })
            }
            EventBody::Import { iteration, plans } => {
                self.run_import(*iteration, plans)?;
                Ok(body.clone())
            }
            EventBody::Curate { iteration, keep } => {
                let it = self.iteration_mut(*iteration)?;
                if let Some(bad) = keep.iter().find(|id| !it.plans.iter().any(|p| &&p.id == id)) {
                    return Err(SessionError::UnknownPlan(bad.clone()));
                }
                it.curated = Some(keep.clone());
                Ok(body.clone())
            }
            EventBody::Rank { iteration, input, .. } => {
                let scores = self.run_rank(*iteration, input)?;
                Ok(EventBody::Rank {
                    iteration: *iteration,
                    input: input.clone(),
                    scores,
                })
            }
            EventBody::Fit { iteration, spec, .. } => {
                let result = self.run_fit(*iteration, spec)?;
                Ok(EventBody::Fit {
                    iteration: *iteration,
                    spec: spec.clone(),
                    result,
                })
            }
            EventBody::Comment { iteration, plan, text } => {
                if let Some(p) = plan {
                    if self.find_plan(p).is_none() {
                        return Err(SessionError::UnknownPlan(p.clone()));
                    }
                }
                self.iteration_mut(*iteration)?.comments.push(CommentEntry {
                    plan: plan.clone(),
                    text: text.clone(),
                });
                Ok(body.clone())
            }
            EventBody::Accept { plan } => {
                if self.find_plan(plan).is_none() {
                    return Err(SessionError::UnknownPlan(plan.clone()));
                }
                self.accepted = Some(plan.clone());
                self.status = SessionStatus::Converged;
                Ok(body.clone())
            }
        }
    }

    fn commit(&mut self, body: EventBody) -> Result<EventBody, SessionError> {
        let done = self.apply(&body)?;
        self.record(done.clone())?;
        Ok(done)
    }

    fn next_iteration(&self) -> usize {
        self.iterations.last().map_or(1, |it| it.number + 1)
    }

    /// Optimizes every scenario and records the deduplicated plans as a new
    /// iteration.
    pub fn generate(&mut self, scenarios: Vec<ScenarioSpec>) -> Result<&Iteration, SessionError> {
        let iteration = self.next_iteration();
        self.commit(EventBody::Generate {
            iteration,
            scenarios,
            outcome: GenerateOutcome::default(),
        })?;
        self.iteration(iteration)
    }

    /// Records externally designed plans as a new iteration.
    pub fn import(&mut self, plans: Vec<NamedPlan>) -> Result<&Iteration, SessionError> {
        let iteration = self.next_iteration();
        self.commit(EventBody::Import { iteration, plans })?;
        self.iteration(iteration)
    }

    pub fn curate(&mut self, iteration: usize, keep: Vec<String>) -> Result<(), SessionError> {
        self.commit(EventBody::Curate { iteration, keep }).map(|_| ())
    }

    pub fn rank(&mut self, iteration: usize, input: RankInput) -> Result<ScoreTable, SessionError> {
        match self.commit(EventBody::Rank {
            iteration,
            input,
            scores: ScoreTable::new(),
        })? {
            EventBody::Rank { scores, .. } => Ok(scores),
            _ => unreachable!(),
        }
    }

    pub fn fit(&mut self, iteration: usize, spec: FitSpec) -> Result<RegressionResult, SessionError> {
        let placeholder = RegressionResult {
            mode: spec.mode,
            parameters: crate::fit::Parameters::WeightedSum { weights: Vec::new() },
            normalization: None,
            k: 0.0,
            k0: 0.0,
            items: Vec::new(),
            total_error: 0.0,
            lp_iterations: 0,
        };
        match self.commit(EventBody::Fit {
            iteration,
            spec,
            result: placeholder,
        })? {
            EventBody::Fit { result, .. } => Ok(result),
            _ => unreachable!(),
        }
    }

    /// Fits every request on `iteration`, then generates the next iteration
    /// from `scenarios`, which may name the freshly fitted objectives.
    pub fn fit_and_advance(
        &mut self,
        iteration: usize,
        specs: Vec<FitSpec>,
        scenarios: Vec<ScenarioSpec>,
    ) -> Result<&Iteration, SessionError> {
        if specs.is_empty() {
            return Err(SessionError::NothingToAdvance);
        }
        if specs.iter().any(|s| s.family == Family::Piecewise) {
            return Err(SessionError::NotAnObjective("piecewise"));
        }
        for spec in specs {
            self.fit(iteration, spec)?;
        }
        self.generate(scenarios)
    }

    pub fn comment(&mut self, iteration: usize, plan: Option<String>, text: String) -> Result<(), SessionError> {
        self.commit(EventBody::Comment { iteration, plan, text }).map(|_| ())
    }

    pub fn accept(&mut self, plan: &str) -> Result<(), SessionError> {
        self.commit(EventBody::Accept { plan: plan.to_string() }).map(|_| ())
    }

    fn resolve_scenario(&self, sc: &ScenarioSpec) -> Result<ScenarioSpec, SessionError> {
        let mut sc = sc.clone();
        if let ObjectiveRef::Named(name) = &sc.objective {
            let spec = self
                .objectives
                .get(name)
                .ok_or_else(|| SessionError::UnknownObjective(name.clone()))?;
            sc.objective = ObjectiveRef::Inline(spec.clone());
        }
        Ok(sc)
    }

    fn run_generate(&mut self, iteration: usize, scenarios: &[ScenarioSpec]) -> Result<GenerateOutcome, SessionError> {
        if iteration != self.next_iteration() {
            return Err(SessionError::UnknownIteration(iteration));
        }
        let resolved = scenarios
            .iter()
            .map(|sc| self.resolve_scenario(sc))
            .collect::<Result<Vec<_>, _>>()?;
        let inst = &self.instance;
        let outcomes: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = resolved
                .iter()
                .map(|sc| scope.spawn(move || optimize(inst, sc)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("solver thread")).collect()
        });
        let mut outcome = GenerateOutcome::default();
        let mut keys = Vec::new();
        for (sc, result) in resolved.iter().zip(outcomes) {
            let result = result?;
            let (Some(mut plan), Some(value)) = (result.plan, result.value) else {
                outcome.infeasible.push((sc.id.clone(), result.status.as_str().to_string()));
                continue;
            };
            let violations = check_feasible(inst, sc, &plan)?;
            if !violations.is_empty() {
                return Err(SessionError::Infeasible {
                    plan: sc.id.clone(),
                    detail: format!("{violations:?}"),
                });
            }
            let key = plan.key(inst)?;
            match keys.iter().position(|k| *k == key) {
                Some(i) => {
                    let existing: &mut GeneratedPlan = &mut outcome.plans[i];
                    existing.plan.provenance.push(sc.id.clone());
                    existing.values.insert(sc.id.clone(), value);
                }
                None => {
                    plan.provenance = vec![sc.id.clone()];
                    keys.push(key);
                    outcome.plans.push(GeneratedPlan {
                        id: format!("p{iteration}-{}", outcome.plans.len() + 1),
                        plan,
                        values: BTreeMap::from([(sc.id.clone(), value)]),
                    });
                }
            }
        }
        if outcome.plans.is_empty() {
            log::warn!("iteration {iteration}: every scenario was infeasible");
        }
        let mut entries = Vec::with_capacity(outcome.plans.len());
        for g in &outcome.plans {
            if self.find_plan(&g.id).is_some() {
                return Err(SessionError::DuplicatePlan(g.id.clone()));
            }
            entries.push(PlanEntry {
                id: g.id.clone(),
                plan: g.plan.clone(),
                values: g.values.clone(),
                contributions: contribution(&self.instance, &g.plan)?,
            });
        }
        self.iterations.push(Iteration {
            number: iteration,
            scenarios: scenarios.to_vec(),
            plans: entries,
            infeasible: outcome.infeasible.clone(),
            ..Iteration::default()
        });
        self.status = SessionStatus::AwaitingRanking;
        Ok(outcome)
    }

    fn run_import(&mut self, iteration: usize, plans: &[NamedPlan]) -> Result<(), SessionError> {
        if iteration != self.next_iteration() {
            return Err(SessionError::UnknownIteration(iteration));
        }
        let mut seen = BTreeSet::new();
        let mut entries = Vec::with_capacity(plans.len());
        for p in plans {
            if !seen.insert(p.id.as_str()) || self.find_plan(&p.id).is_some() {
                return Err(SessionError::DuplicatePlan(p.id.clone()));
            }
            entries.push(PlanEntry {
                id: p.id.clone(),
                plan: p.plan.clone(),
                values: BTreeMap::new(),
                contributions: contribution(&self.instance, &p.plan)?,
            });
        }
        self.iterations.push(Iteration {
            number: iteration,
            plans: entries,
            ..Iteration::default()
        });
        self.status = SessionStatus::AwaitingRanking;
        Ok(())
    }

    fn run_rank(&mut self, iteration: usize, input: &RankInput) -> Result<ScoreTable, SessionError> {
        let ranking = match (&input.ranking, &input.merge) {
            (Some(r), None) => r.clone(),
            (None, Some(m)) => {
                let it = self.iteration(iteration)?;
                let get = |name: &str| {
                    it.rankings
                        .get(name)
                        .map(|e| e.ranking.clone())
                        .ok_or_else(|| SessionError::UnknownRanking(name.to_string()))
                };
                merge(&get(&m.lower)?, &get(&m.upper)?, m.bridge)?
            }
            _ => return Err(SessionError::RankingInput),
        };
        let scores = score(&ranking)?;
        if let Some(bad) = ranking.items().find(|id| self.find_plan(id).is_none()) {
            return Err(SessionError::UnknownPlan(bad.to_string()));
        }
        let it = self.iteration_mut(iteration)?;
        it.rankings.insert(
            input.name.clone(),
            RankingEntry {
                ranking,
                scores: scores.clone(),
            },
        );
        Ok(scores)
    }

    /// The regression request a fit spec expands to.
    pub fn fit_request(&self, iteration: usize, spec: &FitSpec) -> Result<FitRequest, SessionError> {
        let it = self.iteration(iteration)?;
        let entry = it
            .rankings
            .get(&spec.ranking)
            .ok_or_else(|| SessionError::UnknownRanking(spec.ranking.clone()))?;
        let mut items = Vec::new();
        for id in entry.ranking.items() {
            let plan = self.find_plan(id).ok_or_else(|| SessionError::UnknownPlan(id.to_string()))?;
            let c = &plan.contributions;
            items.push(FitItem {
                id: id.to_string(),
                contributions: c.values.clone(),
                flags: if spec.syn {
                    vec![if c.syn { 1.0 } else { 0.0 }]
                } else {
                    Vec::new()
                },
            });
        }
        Ok(FitRequest {
            items,
            scores: entry.scores.iter().map(|(k, &v)| (k.clone(), v as f64)).collect(),
            family: spec.family,
            mode: spec.mode,
            normalization: spec.normalization,
            breakpoints: spec.breakpoints.clone(),
            total: spec.total,
        })
    }

    fn run_fit(&mut self, iteration: usize, spec: &FitSpec) -> Result<RegressionResult, SessionError> {
        let req = self.fit_request(iteration, spec)?;
        let result = fit(&req)?;
        let name = spec.objective_name();
        if let Some(obj) = result.objective_spec() {
            self.objectives.insert(name.clone(), obj);
        }
        let it = self.iteration_mut(iteration)?;
        it.fits.insert(name, result.clone());
        self.status = SessionStatus::Fitted;
        Ok(result)
    }

    /// Plan table in the layout `plan,<facility ids...>` with `l1t0` style
    /// cells and `×` for facilities not selected.
    pub fn export_csv(&self, iteration: usize) -> Result<String, SessionError> {
        let it = self.iteration(iteration)?;
        Ok(plan_table(&self.instance, it.presented().into_iter().map(|p| (p.id.as_str(), &p.plan))))
    }
}

pub fn plan_table<'a>(inst: &PlanningInstance, plans: impl IntoIterator<Item = (&'a str, &'a Plan)>) -> String {
    let mut out = String::from("plan");
    for f in &inst.facilities {
        out.push(',');
        out.push_str(&f.id);
    }
    out.push('\n');
    for (id, plan) in plans {
        out.push_str(id);
        for f in &inst.facilities {
            let cells: Vec<String> = plan
                .assignments
                .iter()
                .filter(|a| a.facility == f.id)
                .map(|a| format!("{}t{}", a.location, a.period))
                .collect();
            let _ = write!(out, ",{}", if cells.is_empty() { "×".to_string() } else { cells.join(" ") });
        }
        out.push('\n');
    }
    out
}

pub fn read_log(path: &Path) -> Result<Vec<Event>, SessionError> {
    let f = File::open(path)?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(Event::from_line(&line).map_err(|message| SessionError::Parse { line: i + 1, message })?);
    }
    Ok(events)
}

fn describe_mismatch(recorded: &EventBody, recomputed: &EventBody) -> String {
    match (recorded, recomputed) {
        (EventBody::Fit { result: a, .. }, EventBody::Fit { result: b, .. }) if a.total_error != b.total_error => {
            format!("total error {:?} recorded, {:?} recomputed", a.total_error, b.total_error)
        }
        (EventBody::Rank { scores: a, .. }, EventBody::Rank { scores: b, .. }) => {
            format!("scores {a:?} recorded, {b:?} recomputed")
        }
        _ => "recorded outputs differ from recomputed ones".to_string(),
    }
}
