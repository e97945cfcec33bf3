//! Value functions over criterion contributions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{choquet_value, Capacity2Additive, CapacityError};
use crate::plan::Contributions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("objective has {got} criteria, instance has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("weights must be nonnegative and sum to 1 (sum is {0})")]
    Weights(f64),
    #[error("normalization bounds have the wrong length")]
    Normalization,
    #[error("at most one bonus criterion (the synergy flag) is supported")]
    TooManyBonus,
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

/// Per-criterion min-max bounds: `g ↦ (g − lower) / (upper − lower)`.
/// A criterion with `upper <= lower` maps to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Normalization {
    /// Bounds spanning the given contribution vectors.
    pub fn min_max<'a>(rows: impl IntoIterator<Item = &'a [f64]>, m: usize) -> Self {
        let mut lower = vec![f64::INFINITY; m];
        let mut upper = vec![f64::NEG_INFINITY; m];
        for row in rows {
            for j in 0..m {
                lower[j] = lower[j].min(row[j]);
                upper[j] = upper[j].max(row[j]);
            }
        }
        for j in 0..m {
            if !lower[j].is_finite() {
                lower[j] = 0.0;
                upper[j] = 0.0;
            }
        }
        Normalization { lower, upper }
    }

    /// Slope and intercept of the affine map for criterion `j`.
    pub fn affine(&self, j: usize) -> (f64, f64) {
        let span = self.upper[j] - self.lower[j];
        if span > 0.0 {
            (1.0 / span, -self.lower[j] / span)
        } else {
            (0.0, 0.0)
        }
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .enumerate()
            .map(|(j, &x)| {
                let span = self.upper[j] - self.lower[j];
                if span > 0.0 {
                    (x - self.lower[j]) / span
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    WeightedSum {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalization: Option<Normalization>,
    },
    Choquet {
        capacity: Capacity2Additive,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalization: Option<Normalization>,
    },
}

impl ObjectiveSpec {
    pub fn weighted_sum(weights: Vec<f64>) -> Self {
        ObjectiveSpec::WeightedSum {
            weights,
            normalization: None,
        }
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        match self {
            ObjectiveSpec::WeightedSum { normalization, .. }
            | ObjectiveSpec::Choquet { normalization, .. } => normalization.as_ref(),
        }
    }

    pub fn criteria(&self) -> usize {
        match self {
            ObjectiveSpec::WeightedSum { weights, .. } => weights.len(),
            ObjectiveSpec::Choquet { capacity, .. } => capacity.criteria(),
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), ObjectiveError> {
        if self.criteria() != m {
            return Err(ObjectiveError::Dimension {
                expected: m,
                got: self.criteria(),
            });
        }
        if let Some(n) = self.normalization() {
            if n.lower.len() != m || n.upper.len() != m {
                return Err(ObjectiveError::Normalization);
            }
            if n.lower.iter().chain(&n.upper).any(|x| !x.is_finite()) {
                return Err(ObjectiveError::Normalization);
            }
        }
        match self {
            ObjectiveSpec::WeightedSum { weights, .. } => {
                let sum: f64 = weights.iter().sum();
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(ObjectiveError::Weights(sum));
                }
            }
            ObjectiveSpec::Choquet { capacity, .. } => {
                capacity.validate(1e-9)?;
                if capacity.bonus.len() > 1 {
                    return Err(ObjectiveError::TooManyBonus);
                }
            }
        }
        Ok(())
    }

    /// Value of the objective for the given contributions.
    pub fn evaluate(&self, c: &Contributions) -> Result<f64, ObjectiveError> {
        let m = self.criteria();
        if c.values.len() != m {
            return Err(ObjectiveError::Dimension {
                expected: m,
                got: c.values.len(),
            });
        }
        let g = match self.normalization() {
            Some(n) => n.apply(&c.values),
            None => c.values.clone(),
        };
        match self {
            ObjectiveSpec::WeightedSum { weights, .. } => {
                Ok(weights.iter().zip(&g).map(|(w, x)| w * x).sum())
            }
            ObjectiveSpec::Choquet { capacity, .. } => {
                let flags: Vec<f64> = if capacity.bonus.is_empty() {
                    Vec::new()
                } else {
                    vec![if c.syn { 1.0 } else { 0.0 }]
                };
                Ok(choquet_value(&g, &flags, capacity)?)
            }
        }
    }
}
