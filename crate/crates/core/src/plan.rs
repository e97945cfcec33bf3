//! Plans and their discounted per-criterion contributions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Placement, PlanningInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("assignment ({facility}, {location}, t{period}): unknown facility")]
    UnknownFacility {
        facility: String,
        location: String,
        period: usize,
    },
    #[error("assignment ({facility}, {location}, t{period}): unknown location")]
    UnknownLocation {
        facility: String,
        location: String,
        period: usize,
    },
    #[error("assignment ({facility}, {location}, t{period}): period outside 0..={last}")]
    PeriodOutOfRange {
        facility: String,
        location: String,
        period: usize,
        last: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub facility: String,
    pub location: String,
    pub period: usize,
}

impl Assignment {
    pub fn new(facility: impl Into<String>, location: impl Into<String>, period: usize) -> Self {
        Assignment {
            facility: facility.into(),
            location: location.into(),
            period,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Activation {
    pub placement: Placement,
    pub period: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub assignments: Vec<Assignment>,
    /// Scenario ids that produced the plan, or `["manual"]`.
    #[serde(default)]
    pub provenance: Vec<String>,
}

impl Plan {
    pub fn manual(assignments: Vec<Assignment>) -> Self {
        Plan {
            assignments,
            provenance: vec!["manual".to_string()],
        }
    }

    pub fn resolve(&self, inst: &PlanningInstance) -> Result<Vec<Activation>, ModelError> {
        let last = inst.last_period();
        self.assignments
            .iter()
            .map(|a| {
                let err_fields = || (a.facility.clone(), a.location.clone(), a.period);
                let Some(fi) = inst.facility_index(&a.facility) else {
                    let (facility, location, period) = err_fields();
                    return Err(ModelError::UnknownFacility { facility, location, period });
                };
                let Some(placement) = inst.placement(&a.facility, &a.location) else {
                    let (facility, location, period) = err_fields();
                    return Err(ModelError::UnknownLocation { facility, location, period });
                };
                debug_assert_eq!(placement.facility, fi);
                if a.period > last {
                    let (facility, location, period) = err_fields();
                    return Err(ModelError::PeriodOutOfRange { facility, location, period, last });
                }
                Ok(Activation {
                    placement,
                    period: a.period,
                })
            })
            .collect()
    }

    /// Sorted activations, used to detect identical plans.
    pub fn key(&self, inst: &PlanningInstance) -> Result<Vec<Activation>, ModelError> {
        let mut k = self.resolve(inst)?;
        k.sort();
        k.dedup();
        Ok(k)
    }

    /// Orders assignments by facility position in the instance.
    pub fn canonicalize(&mut self, inst: &PlanningInstance) {
        self.assignments.sort_by_key(|a| {
            (
                inst.facility_index(&a.facility).unwrap_or(usize::MAX),
                a.location.clone(),
                a.period,
            )
        });
    }

    pub fn from_activations(inst: &PlanningInstance, acts: &[Activation]) -> Plan {
        let mut plan = Plan {
            assignments: acts
                .iter()
                .map(|a| {
                    let f = &inst.facilities[a.placement.facility];
                    Assignment::new(f.id.clone(), f.locations[a.placement.location].id.clone(), a.period)
                })
                .collect(),
            provenance: Vec::new(),
        };
        plan.canonicalize(inst);
        plan
    }
}

/// Discounted contribution of a plan to each criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contributions {
    pub values: Vec<f64>,
    /// True when at least one synergy is realized.
    pub syn: bool,
    /// Realization flag per synergy, in instance order.
    pub synergies: Vec<bool>,
}

impl Contributions {
    pub fn zero(m: usize, synergies: usize) -> Self {
        Contributions {
            values: vec![0.0; m],
            syn: false,
            synergies: vec![false; synergies],
        }
    }
}

/// Earliest activation period of `p` in the plan, if placed.
fn placed_at(acts: &[Activation], p: Placement) -> Option<usize> {
    acts.iter().filter(|a| a.placement == p).map(|a| a.period).min()
}

/// Per-period, per-criterion increments: row `t` holds
/// `v(t) · (Σ_{τ<t} y + Σ_{synergies complete by t} σ (y_a + y_b))`.
fn increments(inst: &PlanningInstance, acts: &[Activation]) -> (Vec<Vec<f64>>, Vec<bool>) {
    let m = inst.criteria_count();
    let last = inst.last_period();
    let mut rows = vec![vec![0.0; m]; last + 1];
    for a in acts {
        let y = &inst.location(a.placement).evaluations;
        for (t, row) in rows.iter_mut().enumerate().skip(a.period + 1) {
            let v = inst.discount[t];
            for j in 0..m {
                row[j] += v * y[j];
            }
        }
    }
    let mut realized = vec![false; inst.synergies.len()];
    for (r, s) in inst.synergies.iter().enumerate() {
        let (Some(ta), Some(tb)) = (placed_at(acts, s.a), placed_at(acts, s.b)) else {
            continue;
        };
        realized[r] = true;
        let ya = &inst.location(s.a).evaluations;
        let yb = &inst.location(s.b).evaluations;
        for (t, row) in rows.iter_mut().enumerate().skip(ta.max(tb).max(1)) {
            let v = inst.discount[t];
            for j in 0..m {
                row[j] += v * s.boost * (ya[j] + yb[j]);
            }
        }
    }
    (rows, realized)
}

pub fn contribution(inst: &PlanningInstance, plan: &Plan) -> Result<Contributions, ModelError> {
    let acts = plan.resolve(inst)?;
    Ok(contribution_of(inst, &acts))
}

pub fn contribution_of(inst: &PlanningInstance, acts: &[Activation]) -> Contributions {
    let m = inst.criteria_count();
    let (rows, synergies) = increments(inst, acts);
    let mut values = vec![0.0; m];
    for row in &rows {
        for j in 0..m {
            values[j] += row[j];
        }
    }
    Contributions {
        values,
        syn: synergies.iter().any(|&r| r),
        synergies,
    }
}

/// Contribution increments by period (row `t`, column criterion). Row 0 is
/// always zero; the column sums equal [`contribution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodBreakdown {
    pub per_criterion: Vec<Vec<f64>>,
}

impl PeriodBreakdown {
    /// `Σ_j w_j` of each period's increments.
    pub fn weighted(&self, weights: &[f64]) -> Vec<f64> {
        self.per_criterion
            .iter()
            .map(|row| row.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }
}

pub fn period_breakdown(inst: &PlanningInstance, plan: &Plan) -> Result<PeriodBreakdown, ModelError> {
    let acts = plan.resolve(inst)?;
    Ok(PeriodBreakdown {
        per_criterion: increments(inst, &acts).0,
    })
}
