//! Planning instances: facilities, candidate locations, periods, budgets and
//! the logical relations between placements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::money::Cents;
use crate::objective::ObjectiveSpec;

/// A field-level validation problem. `path` uses dotted JSON notation, e.g.
/// `facilities[2].locations[0].cost`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceError(pub Vec<Diagnostic>);

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for InstanceError {}

// ---------------------------------------------------------------------------
// File format

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub name: String,
    pub criteria: Vec<CriterionFile>,
    /// Number of periods, indexed `0..periods`.
    pub periods: usize,
    pub discount: DiscountSpec,
    /// Named budget schedules, one amount per period.
    pub budgets: BTreeMap<String, Vec<Cents>>,
    pub facilities: Vec<FacilityFile>,
    #[serde(default)]
    pub exclusions: Vec<PairFile>,
    #[serde(default)]
    pub precedences: Vec<PrecedenceFile>,
    #[serde(default)]
    pub synergies: Vec<SynergyFile>,
    /// Named objective specifications available to scenarios.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objectives: BTreeMap<String, ObjectiveSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionFile {
    pub id: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiscountSpec {
    /// `v(t) = base^-t`.
    Base { base: f64 },
    Factors(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacilityFile {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub locations: Vec<LocationFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationFile {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub cost: Cents,
    /// Criterion id to evaluation.
    pub evaluations: BTreeMap<String, f64>,
    /// Buildings the location occupies, for per-building scenario rules.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buildings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRef {
    pub facility: String,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub a: PlacementRef,
    pub b: PlacementRef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecedenceFile {
    pub earlier: String,
    pub later: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynergyFile {
    #[serde(default)]
    pub id: String,
    pub a: PlacementRef,
    pub b: PlacementRef,
    pub boost: f64,
}

// ---------------------------------------------------------------------------
// Validated form

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Location {
    pub id: String,
    pub label: String,
    pub cost: Cents,
    /// One evaluation per criterion, in criterion order.
    pub evaluations: Vec<f64>,
    pub buildings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facility {
    pub id: String,
    pub label: String,
    pub locations: Vec<Location>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Placement {
    pub facility: usize,
    pub location: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synergy {
    pub id: String,
    pub a: Placement,
    pub b: Placement,
    pub boost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct PlanningInstance {
    pub name: String,
    pub criteria: Vec<Criterion>,
    /// Discount factor per period; `discount.len()` is the number of periods.
    pub discount: Vec<f64>,
    pub budgets: BTreeMap<String, Vec<Cents>>,
    pub facilities: Vec<Facility>,
    pub exclusions: Vec<(Placement, Placement)>,
    /// `(earlier, later)` facility indices.
    pub precedences: Vec<(usize, usize)>,
    pub synergies: Vec<Synergy>,
    pub objectives: BTreeMap<String, ObjectiveSpec>,
    discount_spec: DiscountSpec,
}

impl PlanningInstance {
    pub fn periods(&self) -> usize {
        self.discount.len()
    }

    /// Index of the last period, `p`.
    pub fn last_period(&self) -> usize {
        self.discount.len() - 1
    }

    pub fn criteria_count(&self) -> usize {
        self.criteria.len()
    }

    pub fn facility_index(&self, id: &str) -> Option<usize> {
        self.facilities.iter().position(|f| f.id == id)
    }

    pub fn criterion_index(&self, id: &str) -> Option<usize> {
        self.criteria.iter().position(|c| c.id == id)
    }

    pub fn placement(&self, facility: &str, location: &str) -> Option<Placement> {
        let fi = self.facility_index(facility)?;
        let li = self.facilities[fi]
            .locations
            .iter()
            .position(|l| l.id == location)?;
        Some(Placement {
            facility: fi,
            location: li,
        })
    }

    pub fn location(&self, p: Placement) -> &Location {
        &self.facilities[p.facility].locations[p.location]
    }

    pub fn placement_name(&self, p: Placement) -> String {
        let f = &self.facilities[p.facility];
        format!("{}@{}", f.id, f.locations[p.location].id)
    }

    pub fn budget(&self, name: &str) -> Option<&[Cents]> {
        self.budgets.get(name).map(Vec::as_slice)
    }

    /// `Σ_{t≥1} v(t)`, the total weight an activation at period 0 collects.
    pub fn discount_tail(&self, from: usize) -> f64 {
        self.discount.iter().skip(from).sum()
    }

    /// Copy of the instance with every synergy removed.
    pub fn without_synergies(&self) -> PlanningInstance {
        let mut copy = self.clone();
        copy.synergies.clear();
        copy
    }

    /// Parses and validates an instance from JSON text, collecting every
    /// problem found.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            InstanceError(vec![Diagnostic::new(path, e.into_inner().to_string())])
        })?;
        PlanningInstance::try_from(file)
    }

    pub fn to_file(&self) -> InstanceFile {
        self.clone().into()
    }
}

fn placement_ref(
    facilities: &[FacilityFile],
    r: &PlacementRef,
    path: &str,
    out: &mut Vec<Diagnostic>,
) -> Option<Placement> {
    let Some(fi) = facilities.iter().position(|f| f.id == r.facility) else {
        out.push(Diagnostic::new(
            format!("{path}.facility"),
            format!("unknown facility '{}'", r.facility),
        ));
        return None;
    };
    let Some(li) = facilities[fi].locations.iter().position(|l| l.id == r.location) else {
        out.push(Diagnostic::new(
            format!("{path}.location"),
            format!("facility '{}' has no location '{}'", r.facility, r.location),
        ));
        return None;
    };
    Some(Placement {
        facility: fi,
        location: li,
    })
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = BTreeSet::new();
    ids.filter(|id| !seen.insert(*id)).collect()
}

impl TryFrom<InstanceFile> for PlanningInstance {
    type Error = InstanceError;

    fn try_from(file: InstanceFile) -> Result<Self, Self::Error> {
        let mut diags = Vec::new();

        if file.criteria.is_empty() {
            diags.push(Diagnostic::new("criteria", "at least one criterion is required"));
        }
        for id in duplicates(file.criteria.iter().map(|c| c.id.as_str())) {
            diags.push(Diagnostic::new("criteria", format!("duplicate criterion '{id}'")));
        }
        if file.periods == 0 {
            diags.push(Diagnostic::new("periods", "at least one period is required"));
        }

        let discount = match &file.discount {
            DiscountSpec::Base { base } => {
                if !(base.is_finite() && *base >= 1.0) {
                    diags.push(Diagnostic::new("discount.base", "base must be finite and >= 1"));
                }
                (0..file.periods).map(|t| base.powi(-(t as i32))).collect()
            }
            DiscountSpec::Factors(v) => {
                if v.len() != file.periods {
                    diags.push(Diagnostic::new(
                        "discount",
                        format!("expected {} factors, got {}", file.periods, v.len()),
                    ));
                }
                for (t, &f) in v.iter().enumerate() {
                    if !(f.is_finite() && (0.0..=1.0).contains(&f)) {
                        diags.push(Diagnostic::new(format!("discount[{t}]"), "factor must lie in [0, 1]"));
                    } else if t > 0 && f > v[t - 1] {
                        diags.push(Diagnostic::new(format!("discount[{t}]"), "factors must be non-increasing"));
                    }
                }
                v.clone()
            }
        };

        for (name, schedule) in &file.budgets {
            if schedule.len() != file.periods {
                diags.push(Diagnostic::new(
                    format!("budgets.{name}"),
                    format!("expected {} amounts, got {}", file.periods, schedule.len()),
                ));
            }
            for (t, b) in schedule.iter().enumerate() {
                if b.0 < 0 {
                    diags.push(Diagnostic::new(format!("budgets.{name}[{t}]"), "negative budget"));
                }
            }
        }

        for id in duplicates(file.facilities.iter().map(|f| f.id.as_str())) {
            diags.push(Diagnostic::new("facilities", format!("duplicate facility '{id}'")));
        }
        let criterion_ids: BTreeSet<&str> = file.criteria.iter().map(|c| c.id.as_str()).collect();
        let mut facilities = Vec::with_capacity(file.facilities.len());
        for (fi, f) in file.facilities.iter().enumerate() {
            let fpath = format!("facilities[{fi}]");
            if f.locations.is_empty() {
                diags.push(Diagnostic::new(format!("{fpath}.locations"), "at least one location is required"));
            }
            for id in duplicates(f.locations.iter().map(|l| l.id.as_str())) {
                diags.push(Diagnostic::new(format!("{fpath}.locations"), format!("duplicate location '{id}'")));
            }
            let mut locations = Vec::with_capacity(f.locations.len());
            for (li, l) in f.locations.iter().enumerate() {
                let lpath = format!("{fpath}.locations[{li}]");
                if l.cost.0 < 0 {
                    diags.push(Diagnostic::new(format!("{lpath}.cost"), "cost must be nonnegative"));
                }
                for key in l.evaluations.keys() {
                    if !criterion_ids.contains(key.as_str()) {
                        diags.push(Diagnostic::new(
                            format!("{lpath}.evaluations.{key}"),
                            "unknown criterion",
                        ));
                    }
                }
                let mut evaluations = Vec::with_capacity(file.criteria.len());
                for c in &file.criteria {
                    match l.evaluations.get(&c.id) {
                        Some(&y) if y.is_finite() && y >= 0.0 => evaluations.push(y),
                        Some(_) => {
                            diags.push(Diagnostic::new(
                                format!("{lpath}.evaluations.{}", c.id),
                                "evaluation must be finite and nonnegative",
                            ));
                            evaluations.push(0.0);
                        }
                        None => {
                            diags.push(Diagnostic::new(
                                format!("{lpath}.evaluations.{}", c.id),
                                "missing evaluation",
                            ));
                            evaluations.push(0.0);
                        }
                    }
                }
                locations.push(Location {
                    id: l.id.clone(),
                    label: l.label.clone(),
                    cost: l.cost,
                    evaluations,
                    buildings: l.buildings.clone(),
                });
            }
            facilities.push(Facility {
                id: f.id.clone(),
                label: f.label.clone(),
                locations,
            });
        }

        let mut exclusions = Vec::new();
        for (k, e) in file.exclusions.iter().enumerate() {
            let path = format!("exclusions[{k}]");
            let a = placement_ref(&file.facilities, &e.a, &format!("{path}.a"), &mut diags);
            let b = placement_ref(&file.facilities, &e.b, &format!("{path}.b"), &mut diags);
            if let (Some(a), Some(b)) = (a, b) {
                if a.facility == b.facility {
                    diags.push(Diagnostic::new(path, "an exclusion must involve two facilities"));
                } else {
                    exclusions.push((a, b));
                }
            }
        }

        let mut precedences = Vec::new();
        for (k, p) in file.precedences.iter().enumerate() {
            let path = format!("precedences[{k}]");
            let e = file.facilities.iter().position(|f| f.id == p.earlier);
            let l = file.facilities.iter().position(|f| f.id == p.later);
            if e.is_none() {
                diags.push(Diagnostic::new(format!("{path}.earlier"), format!("unknown facility '{}'", p.earlier)));
            }
            if l.is_none() {
                diags.push(Diagnostic::new(format!("{path}.later"), format!("unknown facility '{}'", p.later)));
            }
            if let (Some(e), Some(l)) = (e, l) {
                if e == l {
                    diags.push(Diagnostic::new(path, "a facility cannot precede itself"));
                } else {
                    precedences.push((e, l));
                }
            }
        }

        let mut synergies = Vec::new();
        for (k, s) in file.synergies.iter().enumerate() {
            let path = format!("synergies[{k}]");
            if !(s.boost.is_finite() && s.boost >= 0.0) {
                diags.push(Diagnostic::new(format!("{path}.boost"), "boost must be finite and nonnegative"));
            }
            let a = placement_ref(&file.facilities, &s.a, &format!("{path}.a"), &mut diags);
            let b = placement_ref(&file.facilities, &s.b, &format!("{path}.b"), &mut diags);
            if let (Some(a), Some(b)) = (a, b) {
                if a.facility == b.facility {
                    diags.push(Diagnostic::new(path, "synergy anchors must be distinct facilities"));
                } else {
                    let id = if s.id.is_empty() { format!("s{}", k + 1) } else { s.id.clone() };
                    synergies.push(Synergy {
                        id,
                        a,
                        b,
                        boost: s.boost,
                    });
                }
            }
        }

        for (name, spec) in &file.objectives {
            if let Err(e) = spec.validate(file.criteria.len()) {
                diags.push(Diagnostic::new(format!("objectives.{name}"), e.to_string()));
            }
        }

        if !diags.is_empty() {
            return Err(InstanceError(diags));
        }
        Ok(PlanningInstance {
            name: file.name,
            criteria: file
                .criteria
                .into_iter()
                .map(|c| Criterion { id: c.id, label: c.label })
                .collect(),
            discount,
            budgets: file.budgets,
            facilities,
            exclusions,
            precedences,
            synergies,
            objectives: file.objectives,
            discount_spec: file.discount,
        })
    }
}

impl From<PlanningInstance> for InstanceFile {
    fn from(inst: PlanningInstance) -> Self {
        let pref = |p: Placement| PlacementRef {
            facility: inst.facilities[p.facility].id.clone(),
            location: inst.facilities[p.facility].locations[p.location].id.clone(),
        };
        InstanceFile {
            name: inst.name.clone(),
            criteria: inst
                .criteria
                .iter()
                .map(|c| CriterionFile {
                    id: c.id.clone(),
                    label: c.label.clone(),
                })
                .collect(),
            periods: inst.discount.len(),
            discount: inst.discount_spec.clone(),
            budgets: inst.budgets.clone(),
            facilities: inst
                .facilities
                .iter()
                .map(|f| FacilityFile {
                    id: f.id.clone(),
                    label: f.label.clone(),
                    locations: f
                        .locations
                        .iter()
                        .map(|l| LocationFile {
                            id: l.id.clone(),
                            label: l.label.clone(),
                            cost: l.cost,
                            evaluations: inst
                                .criteria
                                .iter()
                                .zip(&l.evaluations)
                                .map(|(c, &y)| (c.id.clone(), y))
                                .collect(),
                            buildings: l.buildings.clone(),
                        })
                        .collect(),
                })
                .collect(),
            exclusions: inst
                .exclusions
                .iter()
                .map(|&(a, b)| PairFile { a: pref(a), b: pref(b) })
                .collect(),
            precedences: inst
                .precedences
                .iter()
                .map(|&(e, l)| PrecedenceFile {
                    earlier: inst.facilities[e].id.clone(),
                    later: inst.facilities[l].id.clone(),
                })
                .collect(),
            synergies: inst
                .synergies
                .iter()
                .map(|s| SynergyFile {
                    id: s.id.clone(),
                    a: pref(s.a),
                    b: pref(s.b),
                    boost: s.boost,
                })
                .collect(),
            objectives: inst.objectives.clone(),
        }
    }
}
