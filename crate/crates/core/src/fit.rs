//! Ordinal regression of value functions onto deck-of-cards scores.
//!
//! Each fit is a single LP minimizing `Σ σ⁺ + σ⁻` subject to the value
//! function's own constraints and, for every item,
//! `U(item) − σ⁺ + σ⁻ = k·ν(item)` (plus a free offset `k0` in affine mode).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dor_lp::exact::{exact_vertex, to_f64};
use dor_lp::{solve_lp, LinearProgram, Relation, Sense, SolverConfig, Status, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{choquet_value, pair_count, pairs, Capacity2Additive};
use crate::objective::{Normalization, ObjectiveSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no items to fit")]
    NoItems,
    #[error("item '{0}' has no score")]
    MissingScore(String),
    #[error("item '{item}' has {got} contributions, expected {expected}")]
    Dimension { item: String, expected: usize, got: usize },
    #[error("item '{0}' has a non-finite or negative value")]
    BadValue(String),
    #[error("expected {expected} breakpoint lists, got {got}")]
    BreakpointCount { expected: usize, got: usize },
    #[error("breakpoints for criterion {0} must be finite, strictly increasing, at least two")]
    BadBreakpoints(usize),
    #[error("item '{item}' criterion {criterion}: {value} lies outside the breakpoint range")]
    OutOfRange { item: String, criterion: usize, value: f64 },
    #[error("standalone flags are only supported by the choquet family")]
    FlagsUnsupported,
    #[error("normalization total must be positive and finite")]
    BadTotal,
    #[error("regression LP ended with status {0}")]
    Solver(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    WeightedSum,
    Piecewise,
    Choquet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// `U − σ⁺ + σ⁻ = k·ν`, `k ≥ 0`.
    #[default]
    Multiplicative,
    /// `U − σ⁺ + σ⁻ = k·ν + k0`, `k ≥ 0`, `k0` free.
    Affine,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    #[default]
    None,
    /// Per-criterion min-max over the fitted items.
    MinMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitItem {
    pub id: String,
    pub contributions: Vec<f64>,
    /// Standalone 0/1 criteria such as the synergy flag.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub items: Vec<FitItem>,
    pub scores: BTreeMap<String, f64>,
    pub family: Family,
    #[serde(default)]
    pub mode: ScalingMode,
    #[serde(default)]
    pub normalization: NormalizationMode,
    /// Piecewise family: breakpoints per criterion, first one anchoring 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<Vec<f64>>,
    /// Piecewise family: sum of the marginal values at the top breakpoints.
    #[serde(default = "default_total")]
    pub total: f64,
}

fn default_total() -> f64 {
    1.0
}

impl FitRequest {
    pub fn new(family: Family, items: Vec<FitItem>, scores: BTreeMap<String, f64>) -> Self {
        FitRequest {
            items,
            scores,
            family,
            mode: ScalingMode::Multiplicative,
            normalization: NormalizationMode::None,
            breakpoints: Vec::new(),
            total: 1.0,
        }
    }

    pub fn criteria(&self) -> usize {
        self.items.first().map_or(0, |i| i.contributions.len())
    }

    pub fn flag_count(&self) -> usize {
        self.items.first().map_or(0, |i| i.flags.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Parameters {
    WeightedSum {
        weights: Vec<f64>,
    },
    Piecewise {
        breakpoints: Vec<Vec<f64>>,
        /// Marginal value at each breakpoint.
        values: Vec<Vec<f64>>,
    },
    Choquet {
        capacity: Capacity2Additive,
    },
}

impl Parameters {
    /// Value of the fitted function at (already normalized) contributions.
    pub fn evaluate(&self, g: &[f64], flags: &[f64]) -> f64 {
        match self {
            Parameters::WeightedSum { weights } => weights.iter().zip(g).map(|(w, x)| w * x).sum(),
            Parameters::Piecewise { breakpoints, values } => (0..g.len())
                .map(|j| interpolate(&breakpoints[j], &values[j], g[j]))
                .sum(),
            Parameters::Choquet { capacity } => {
                choquet_value(g, flags, capacity).expect("dimensions checked when fitting")
            }
        }
    }
}

fn interpolate(bp: &[f64], u: &[f64], x: f64) -> f64 {
    let (r, lambda) = segment(bp, x).expect("range checked when fitting");
    if lambda == 0.0 {
        u[r]
    } else {
        u[r] + lambda * (u[r + 1] - u[r])
    }
}

/// Segment index and interpolation weight of `x`.
fn segment(bp: &[f64], x: f64) -> Option<(usize, f64)> {
    let last = bp.len() - 1;
    if !(x >= bp[0] && x <= bp[last]) {
        return None;
    }
    if x == bp[last] {
        return Some((last - 1, 1.0));
    }
    let r = bp.iter().rposition(|&b| b <= x)?;
    Some((r, (x - bp[r]) / (bp[r + 1] - bp[r])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedItem {
    pub id: String,
    pub nu: f64,
    /// Fitted value function at the item.
    pub u: f64,
    /// `k·ν` (plus `k0` in affine mode).
    pub scaled: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub mode: ScalingMode,
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    pub k: f64,
    #[serde(default)]
    pub k0: f64,
    pub items: Vec<FittedItem>,
    pub total_error: f64,
    pub lp_iterations: usize,
}

impl RegressionResult {
    pub fn family(&self) -> Family {
        match self.parameters {
            Parameters::WeightedSum { .. } => Family::WeightedSum,
            Parameters::Piecewise { .. } => Family::Piecewise,
            Parameters::Choquet { .. } => Family::Choquet,
        }
    }

    /// The fitted function as a space-time objective. Piecewise functions
    /// have no MILP encoding here.
    pub fn objective_spec(&self) -> Option<ObjectiveSpec> {
        match &self.parameters {
            Parameters::WeightedSum { weights } => Some(ObjectiveSpec::WeightedSum {
                weights: weights.clone(),
                normalization: self.normalization.clone(),
            }),
            Parameters::Choquet { capacity } => Some(ObjectiveSpec::Choquet {
                capacity: capacity.clone(),
                normalization: self.normalization.clone(),
            }),
            Parameters::Piecewise { .. } => None,
        }
    }

    /// Per-item table `item,U,nu,k_nu,sigma_plus,sigma_minus`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,U,nu,k_nu,sigma_plus,sigma_minus\n");
        for it in &self.items {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                it.id, it.u, it.nu, it.scaled, it.sigma_plus, it.sigma_minus
            );
        }
        out
    }
}

/// How the Choquet monotonicity conditions enter the LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotonicityRows {
    /// One row per criterion over auxiliary `z_jk ≤ min(0, w_jk)`.
    Reduced,
    /// One row per criterion and nonempty subset of the others.
    Exhaustive,
}

struct Prepared {
    g: Vec<Vec<f64>>,
    nu: Vec<f64>,
    /// Largest score; the LP sees `ν / nu_scale` so that its data do not
    /// depend on the unit of the scores.
    nu_scale: f64,
    normalization: Option<Normalization>,
}

fn prepare(req: &FitRequest) -> Result<Prepared, FitError> {
    if req.items.is_empty() {
        return Err(FitError::NoItems);
    }
    let m = req.criteria();
    let f = req.flag_count();
    if f > 0 && req.family != Family::Choquet {
        return Err(FitError::FlagsUnsupported);
    }
    let mut nu = Vec::with_capacity(req.items.len());
    for item in &req.items {
        if item.contributions.len() != m {
            return Err(FitError::Dimension {
                item: item.id.clone(),
                expected: m,
                got: item.contributions.len(),
            });
        }
        if item.flags.len() != f {
            return Err(FitError::Dimension {
                item: item.id.clone(),
                expected: f,
                got: item.flags.len(),
            });
        }
        if item.contributions.iter().chain(&item.flags).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(FitError::BadValue(item.id.clone()));
        }
        match req.scores.get(&item.id) {
            Some(&v) if v.is_finite() && v >= 0.0 => nu.push(v),
            Some(_) => return Err(FitError::BadValue(item.id.clone())),
            None => return Err(FitError::MissingScore(item.id.clone())),
        }
    }
    let normalization = match req.normalization {
        NormalizationMode::None => None,
        NormalizationMode::MinMax => Some(Normalization::min_max(
            req.items.iter().map(|i| i.contributions.as_slice()),
            m,
        )),
    };
    let g = req
        .items
        .iter()
        .map(|i| match &normalization {
            Some(n) => n.apply(&i.contributions),
            None => i.contributions.clone(),
        })
        .collect();
    if req.family == Family::Piecewise {
        if !(req.total.is_finite() && req.total > 0.0) {
            return Err(FitError::BadTotal);
        }
        if req.breakpoints.len() != m {
            return Err(FitError::BreakpointCount {
                expected: m,
                got: req.breakpoints.len(),
            });
        }
        for (j, bp) in req.breakpoints.iter().enumerate() {
            if bp.len() < 2 || bp.iter().any(|b| !b.is_finite()) || bp.windows(2).any(|w| w[0] >= w[1]) {
                return Err(FitError::BadBreakpoints(j));
            }
        }
    }
    let top = nu.iter().copied().fold(0.0, f64::max);
    let nu_scale = if top > 0.0 { top } else { 1.0 };
    let prepared = Prepared {
        g,
        nu,
        nu_scale,
        normalization,
    };
    if req.family == Family::Piecewise {
        for (i, row) in prepared.g.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if segment(&req.breakpoints[j], x).is_none() {
                    return Err(FitError::OutOfRange {
                        item: req.items[i].id.clone(),
                        criterion: j,
                        value: x,
                    });
                }
            }
        }
    }
    Ok(prepared)
}

struct Layout {
    params: Vec<VarId>,
    k: VarId,
    k0: Option<VarId>,
    sigma: Vec<(VarId, VarId)>,
}

fn build(req: &FitRequest, prep: &Prepared, rows: MonotonicityRows) -> (LinearProgram, Layout) {
    let m = req.criteria();
    let mut lp = LinearProgram::new(Sense::Minimize).with_name("regression");
    let mut params = Vec::new();
    // Coefficients of U(item) over `params`, one row per item.
    let mut u_rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); req.items.len()];

    match req.family {
        Family::WeightedSum => {
            for j in 0..m {
                params.push(lp.add_nonneg(format!("w{}", j + 1)));
            }
            for (i, g) in prep.g.iter().enumerate() {
                u_rows[i] = params.iter().zip(g).map(|(&v, &x)| (v, x)).collect();
            }
            let terms = params.iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint("normalization", terms, Relation::Eq, 1.0);
        }
        Family::Choquet => {
            for j in 0..m {
                params.push(lp.add_nonneg(format!("w{}", j + 1)));
            }
            for (a, b) in pairs(m) {
                params.push(lp.add_free(format!("w{}{}", a + 1, b + 1)));
            }
            for f in 0..req.flag_count() {
                params.push(lp.add_nonneg(format!("bonus{}", f + 1)));
            }
            for (i, g) in prep.g.iter().enumerate() {
                let mut row: Vec<(VarId, f64)> = (0..m).map(|j| (params[j], g[j])).collect();
                for (p, (a, b)) in pairs(m).enumerate() {
                    row.push((params[m + p], g[a].min(g[b])));
                }
                for (f, &flag) in req.items[i].flags.iter().enumerate() {
                    row.push((params[m + pair_count(m) + f], flag));
                }
                u_rows[i] = row;
            }
            let terms = params.iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint("normalization", terms, Relation::Eq, 1.0);
            let pair_var = |a: usize, b: usize| params[m + crate::capacity::pair_index(m, a, b)];
            match rows {
                MonotonicityRows::Reduced => {
                    for j in 0..m {
                        let mut terms = vec![(params[j], 1.0)];
                        for k in (0..m).filter(|&k| k != j) {
                            let z = lp.add_var(format!("z{}_{}", j + 1, k + 1), f64::NEG_INFINITY, 0.0);
                            lp.add_constraint(
                                format!("z{}_{}_cap", j + 1, k + 1),
                                vec![(z, 1.0), (pair_var(j, k), -1.0)],
                                Relation::Le,
                                0.0,
                            );
                            terms.push((z, 1.0));
                        }
                        lp.add_constraint(format!("monotone{}", j + 1), terms, Relation::Ge, 0.0);
                    }
                }
                MonotonicityRows::Exhaustive => {
                    for j in 0..m {
                        let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
                        for mask in 1u64..1 << others.len() {
                            let mut terms = vec![(params[j], 1.0)];
                            for (b, &k) in others.iter().enumerate() {
                                if mask >> b & 1 == 1 {
                                    terms.push((pair_var(j, k), 1.0));
                                }
                            }
                            lp.add_constraint(format!("monotone{}_{mask}", j + 1), terms, Relation::Ge, 0.0);
                        }
                    }
                }
            }
        }
        Family::Piecewise => {
            let mut offsets = Vec::with_capacity(m);
            for (j, bp) in req.breakpoints.iter().enumerate() {
                offsets.push(params.len());
                for r in 0..bp.len() {
                    let v = if r == 0 {
                        lp.add_var(format!("u{}_0", j + 1), 0.0, 0.0)
                    } else {
                        lp.add_nonneg(format!("u{}_{r}", j + 1))
                    };
                    params.push(v);
                }
                for r in 1..bp.len() {
                    let (lo, hi) = (params[offsets[j] + r - 1], params[offsets[j] + r]);
                    lp.add_constraint(
                        format!("u{}_{r}_monotone", j + 1),
                        vec![(hi, 1.0), (lo, -1.0)],
                        Relation::Ge,
                        0.0,
                    );
                }
            }
            let tops = req
                .breakpoints
                .iter()
                .enumerate()
                .map(|(j, bp)| (params[offsets[j] + bp.len() - 1], 1.0))
                .collect();
            lp.add_constraint("normalization", tops, Relation::Eq, req.total);
            for (i, g) in prep.g.iter().enumerate() {
                let mut row = Vec::new();
                for (j, &x) in g.iter().enumerate() {
                    let (r, lambda) = segment(&req.breakpoints[j], x).expect("checked in prepare");
                    if lambda < 1.0 {
                        row.push((params[offsets[j] + r], 1.0 - lambda));
                    }
                    if lambda > 0.0 {
                        row.push((params[offsets[j] + r + 1], lambda));
                    }
                }
                u_rows[i] = row;
            }
        }
    }

    let k = lp.add_nonneg("k");
    let k0 = match req.mode {
        ScalingMode::Multiplicative => None,
        ScalingMode::Affine => Some(lp.add_free("k0")),
    };
    let mut sigma = Vec::with_capacity(req.items.len());
    for (i, item) in req.items.iter().enumerate() {
        let sp = lp.add_nonneg(format!("sigma_plus_{}", item.id));
        let sm = lp.add_nonneg(format!("sigma_minus_{}", item.id));
        lp.set_objective(sp, 1.0);
        lp.set_objective(sm, 1.0);
        let mut terms = u_rows[i].clone();
        terms.push((k, -prep.nu[i] / prep.nu_scale));
        if let Some(k0) = k0 {
            terms.push((k0, -1.0));
        }
        terms.push((sp, -1.0));
        terms.push((sm, 1.0));
        lp.add_constraint(format!("fit_{}", item.id), terms, Relation::Eq, 0.0);
        sigma.push((sp, sm));
    }
    (lp, Layout { params, k, k0, sigma })
}

/// The regression LP for `req`, as solved by [`fit`].
pub fn regression_program(req: &FitRequest) -> Result<LinearProgram, FitError> {
    let prep = prepare(req)?;
    Ok(build(req, &prep, MonotonicityRows::Reduced).0)
}

pub fn regression_program_with(req: &FitRequest, rows: MonotonicityRows) -> Result<LinearProgram, FitError> {
    let prep = prepare(req)?;
    Ok(build(req, &prep, rows).0)
}

/// Solves an LP and returns its point and objective, recomputed exactly
/// from the final vertex when possible so that the objective does not
/// depend on the pivot path.
pub fn solve_exact(lp: &LinearProgram) -> Result<(Vec<f64>, f64, usize), FitError> {
    let report = solve_lp(lp, &SolverConfig::default()).map_err(|_| FitError::Solver("invalid"))?;
    if report.status != Status::Optimal {
        return Err(FitError::Solver(report.status.as_str()));
    }
    match exact_vertex(lp, &report.values, 1e-7) {
        Some(point) => Ok((
            point.values.iter().map(to_f64).collect(),
            point.objective_f64(),
            report.iterations,
        )),
        None => {
            log::debug!("exact vertex reconstruction failed; using floating-point optimum");
            Ok((report.values, report.objective, report.iterations))
        }
    }
}

pub fn fit(req: &FitRequest) -> Result<RegressionResult, FitError> {
    let prep = prepare(req)?;
    let (lp, layout) = build(req, &prep, MonotonicityRows::Reduced);
    let (x, total_error, first) = solve_exact(&lp)?;
    // Among minimum-error solutions take the one with the largest k, so
    // that a value function that is zero on every item cannot win a tie.
    let mut second = lp.clone();
    let mut bound = Vec::with_capacity(2 * layout.sigma.len());
    for &(sp, sm) in &layout.sigma {
        second.set_objective(sp, 0.0);
        second.set_objective(sm, 0.0);
        bound.push((sp, 1.0));
        bound.push((sm, 1.0));
    }
    second.set_objective(layout.k, -1.0);
    second.add_constraint("error_bound", bound, Relation::Le, total_error);
    let (x, lp_iterations) = match solve_exact(&second) {
        Ok((x2, _, it)) => (x2, first + it),
        Err(e) => {
            log::debug!("k tie-break skipped: {e}");
            (x, first)
        }
    };
    let m = req.criteria();
    let values: Vec<f64> = layout.params.iter().map(|v| x[v.index()]).collect();
    let parameters = match req.family {
        Family::WeightedSum => Parameters::WeightedSum { weights: values },
        Family::Choquet => {
            let p = pair_count(m);
            Parameters::Choquet {
                capacity: Capacity2Additive {
                    singletons: values[..m].to_vec(),
                    pairs: values[m..m + p].to_vec(),
                    bonus: values[m + p..].to_vec(),
                },
            }
        }
        Family::Piecewise => {
            let mut rest = values.as_slice();
            let mut per = Vec::with_capacity(m);
            for bp in &req.breakpoints {
                let (head, tail) = rest.split_at(bp.len());
                per.push(head.to_vec());
                rest = tail;
            }
            Parameters::Piecewise {
                breakpoints: req.breakpoints.clone(),
                values: per,
            }
        }
    };
    let k = x[layout.k.index()] / prep.nu_scale;
    let k0 = layout.k0.map_or(0.0, |v| x[v.index()]);
    let items = req
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| FittedItem {
            id: item.id.clone(),
            nu: prep.nu[i],
            u: parameters.evaluate(&prep.g[i], &item.flags),
            scaled: k * prep.nu[i] + k0,
            sigma_plus: x[layout.sigma[i].0.index()],
            sigma_minus: x[layout.sigma[i].1.index()],
        })
        .collect();
    Ok(RegressionResult {
        mode: req.mode,
        parameters,
        normalization: prep.normalization,
        k,
        k0,
        items,
        total_error,
        lp_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, g: &[f64]) -> FitItem {
        FitItem {
            id: id.into(),
            contributions: g.to_vec(),
            flags: vec![],
        }
    }

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn two_by_two_closed_form() {
        let req = FitRequest::new(
            Family::WeightedSum,
            vec![item("a", &[1.0, 0.0]), item("b", &[0.0, 1.0])],
            scores(&[("a", 2.0), ("b", 1.0)]),
        );
        let r = fit(&req).unwrap();
        assert_eq!(r.total_error, 0.0);
        let Parameters::WeightedSum { weights } = &r.parameters else { unreachable!() };
        assert!((weights[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((weights[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.k - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_item_fits_exactly() {
        let req = FitRequest::new(
            Family::Choquet,
            vec![item("a", &[3.0, 9.0, 4.0])],
            scores(&[("a", 5.0)]),
        );
        assert_eq!(fit(&req).unwrap().total_error, 0.0);
    }

    #[test]
    fn request_errors() {
        let mut req = FitRequest::new(Family::WeightedSum, vec![], BTreeMap::new());
        assert_eq!(fit(&req), Err(FitError::NoItems));
        req.items.push(item("a", &[1.0]));
        assert_eq!(fit(&req), Err(FitError::MissingScore("a".into())));
        req.scores.insert("a".into(), 1.0);
        req.family = Family::Piecewise;
        assert!(matches!(fit(&req), Err(FitError::BreakpointCount { .. })));
        req.breakpoints = vec![vec![0.0, 0.5]];
        assert!(matches!(fit(&req), Err(FitError::OutOfRange { .. })));
        req.breakpoints = vec![vec![0.0, 0.0, 1.0]];
        assert_eq!(fit(&req), Err(FitError::BadBreakpoints(0)));
    }

    #[test]
    fn segment_lookup() {
        let bp = [0.0, 50.0, 75.0, 100.0];
        assert_eq!(segment(&bp, 0.0), Some((0, 0.0)));
        assert_eq!(segment(&bp, 60.0), Some((1, 0.4)));
        assert_eq!(segment(&bp, 75.0), Some((2, 0.0)));
        assert_eq!(segment(&bp, 100.0), Some((2, 1.0)));
        assert_eq!(segment(&bp, 100.5), None);
    }

    #[test]
    fn csv_table() {
        let req = FitRequest::new(
            Family::WeightedSum,
            vec![item("a", &[1.0, 0.0]), item("b", &[0.0, 1.0])],
            scores(&[("a", 2.0), ("b", 1.0)]),
        );
        let csv = fit(&req).unwrap().to_csv();
        assert!(csv.starts_with("item,U,nu,k_nu,sigma_plus,sigma_minus\na,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
