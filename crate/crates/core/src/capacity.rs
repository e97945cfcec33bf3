//! 2-additive capacities in Möbius form and the Choquet integral.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("capacity weights sum to {0}, not 1")]
    Normalization(f64),
    #[error("singleton weight w{0} is negative")]
    NegativeSingleton(usize),
    #[error("bonus weight {0} is negative")]
    NegativeBonus(usize),
    #[error("capacity is not monotone at criterion {0}")]
    NotMonotone(usize),
    #[error("non-finite weight")]
    NonFinite,
}

/// Möbius coefficients of a 2-additive capacity over `m` criteria, plus
/// bonus weights for standalone 0/1 criteria that do not interact.
///
/// `pairs` is stored in lexicographic order (0,1), (0,2), ..., (m-2,m-1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity2Additive {
    pub singletons: Vec<f64>,
    pub pairs: Vec<f64>,
    #[serde(default)]
    pub bonus: Vec<f64>,
}

pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Position of the unordered pair {a, b} in lexicographic order.
pub fn pair_index(m: usize, a: usize, b: usize) -> usize {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(j < m && i != j);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

/// All unordered pairs in storage order.
pub fn pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
}

impl Capacity2Additive {
    pub fn additive(weights: Vec<f64>) -> Self {
        let m = weights.len();
        Capacity2Additive {
            singletons: weights,
            pairs: vec![0.0; pair_count(m)],
            bonus: Vec::new(),
        }
    }

    pub fn criteria(&self) -> usize {
        self.singletons.len()
    }

    pub fn pair(&self, a: usize, b: usize) -> f64 {
        self.pairs[pair_index(self.criteria(), a, b)]
    }

    pub fn total(&self) -> f64 {
        self.singletons.iter().sum::<f64>()
            + self.pairs.iter().sum::<f64>()
            + self.bonus.iter().sum::<f64>()
    }

    /// μ(A) for the criteria whose bits are set in `mask`.
    pub fn measure(&self, mask: u64) -> f64 {
        let m = self.criteria();
        let mut v = 0.0;
        for j in 0..m {
            if mask >> j & 1 == 1 {
                v += self.singletons[j];
            }
        }
        for (k, (a, b)) in pairs(m).enumerate() {
            if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                v += self.pairs[k];
            }
        }
        v
    }

    fn check_shape(&self) -> Result<(), CapacityError> {
        let m = self.criteria();
        if self.pairs.len() != pair_count(m) {
            return Err(CapacityError::Dimension {
                expected: pair_count(m),
                got: self.pairs.len(),
            });
        }
        let all = self.singletons.iter().chain(&self.pairs).chain(&self.bonus);
        if all.into_iter().any(|w| !w.is_finite()) {
            return Err(CapacityError::NonFinite);
        }
        Ok(())
    }

    /// Checks normalization, nonnegativity and monotonicity.
    pub fn validate(&self, tol: f64) -> Result<(), CapacityError> {
        self.check_shape()?;
        let total = self.total();
        if (total - 1.0).abs() > tol {
            return Err(CapacityError::Normalization(total));
        }
        if let Some(j) = self.singletons.iter().position(|&w| w < -tol) {
            return Err(CapacityError::NegativeSingleton(j));
        }
        if let Some(j) = self.bonus.iter().position(|&w| w < -tol) {
            return Err(CapacityError::NegativeBonus(j));
        }
        match self.monotonicity_violation(tol) {
            Some(j) => Err(CapacityError::NotMonotone(j)),
            None => Ok(()),
        }
    }

    /// First criterion `j` for which `w_j` plus its negative pair weights
    /// drops below `-tol`.
    pub fn monotonicity_violation(&self, tol: f64) -> Option<usize> {
        let m = self.criteria();
        (0..m).find(|&j| {
            let worst: f64 = (0..m)
                .filter(|&k| k != j)
                .map(|k| self.pair(j, k).min(0.0))
                .sum();
            self.singletons[j] + worst < -tol
        })
    }

    /// Checks `w_j + Σ_{k∈T} w_jk ≥ 0` for every criterion and every subset
    /// `T` of the other criteria.
    pub fn is_monotone_exhaustive(&self, tol: f64) -> bool {
        let m = self.criteria();
        assert!(m < 32, "exhaustive check limited to fewer than 32 criteria");
        (0..m).all(|j| {
            let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
            (0u64..1 << others.len()).all(|mask| {
                let mut s = self.singletons[j];
                for (b, &k) in others.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        s += self.pair(j, k);
                    }
                }
                s >= -tol
            })
        })
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.monotonicity_violation(tol).is_none()
    }
}

fn check_inputs(g: &[f64], flags: &[f64], cap: &Capacity2Additive) -> Result<(), CapacityError> {
    cap.check_shape()?;
    if g.len() != cap.criteria() {
        return Err(CapacityError::Dimension {
            expected: cap.criteria(),
            got: g.len(),
        });
    }
    if flags.len() != cap.bonus.len() {
        return Err(CapacityError::Dimension {
            expected: cap.bonus.len(),
            got: flags.len(),
        });
    }
    Ok(())
}

/// Möbius form: `Σ w_j g_j + Σ w_jk min(g_j, g_k) + Σ bonus · flag`.
pub fn choquet_value(
    g: &[f64],
    flags: &[f64],
    cap: &Capacity2Additive,
) -> Result<f64, CapacityError> {
    check_inputs(g, flags, cap)?;
    let m = g.len();
    let mut u = 0.0;
    for j in 0..m {
        u += cap.singletons[j] * g[j];
    }
    for (k, (a, b)) in pairs(m).enumerate() {
        u += cap.pairs[k] * g[a].min(g[b]);
    }
    for (w, f) in cap.bonus.iter().zip(flags) {
        u += w * f;
    }
    Ok(u)
}

/// Sorted form: `Σ_j μ({h : g_h ≥ g_(j)}) (g_(j) − g_(j−1))`. Bonus
/// criteria are not part of this form and must be absent.
pub fn choquet_value_sorted(g: &[f64], cap: &Capacity2Additive) -> Result<f64, CapacityError> {
    check_inputs(g, &[], cap)?;
    let m = g.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
    let mut upper_set: u64 = (1u64 << m) - 1;
    let mut previous = 0.0;
    let mut u = 0.0;
    for &j in &order {
        u += cap.measure(upper_set) * (g[j] - previous);
        previous = g[j];
        upper_set &= !(1u64 << j);
    }
    Ok(u)
}
