//! Dense two-phase simplex with implicit variable bounds.
//!
//! The program is rewritten in terms of nonnegative columns, each with an
//! optional finite upper bound handled by bound flipping rather than extra
//! rows. Phase one minimizes the sum of artificial variables; phase two
//! prices the real objective on the surviving basis.

use crate::{LinearProgram, LpError, Relation, Sense, SolveReport, SolverConfig, Status};

/// How an original variable is expressed through standard-form columns.
#[derive(Clone, Copy, Debug)]
enum ColumnMap {
    Fixed(f64),
    /// `x = lower + col`
    Shifted { col: usize, lower: f64 },
    /// `x = upper - col`
    Mirrored { col: usize, upper: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

pub(crate) struct LpOutcome {
    pub status: Status,
    pub values: Vec<f64>,
    pub iterations: usize,
}

/// Solves a program without binary variables.
pub fn solve_lp(lp: &LinearProgram, config: &SolverConfig) -> Result<SolveReport, LpError> {
    lp.validate()?;
    if lp.has_binaries() {
        return Err(LpError::BinaryInLp);
    }
    let bounds: Vec<(f64, f64)> = lp.variables().iter().map(|v| (v.lower, v.upper)).collect();
    let outcome = solve_with_bounds(lp, &bounds, config);
    Ok(report_from(lp, outcome))
}

pub(crate) fn report_from(lp: &LinearProgram, outcome: LpOutcome) -> SolveReport {
    match outcome.status {
        Status::Optimal => SolveReport {
            status: Status::Optimal,
            objective: lp.evaluate(&outcome.values),
            values: outcome.values,
            iterations: outcome.iterations,
            nodes: 1,
            gap: 0.0,
            incumbent_trace: Vec::new(),
        },
        status => SolveReport::without_point(status, outcome.iterations, 1),
    }
}

/// Solves the continuous program obtained by replacing every variable's
/// bounds with `bounds` (binary flags are ignored).
pub(crate) fn solve_with_bounds(
    lp: &LinearProgram,
    bounds: &[(f64, f64)],
    config: &SolverConfig,
) -> LpOutcome {
    let mut maps = Vec::with_capacity(bounds.len());
    let mut col_upper: Vec<f64> = Vec::new();
    for &(lower, upper) in bounds {
        if lower > upper {
            return LpOutcome {
                status: Status::Infeasible,
                values: Vec::new(),
                iterations: 0,
            };
        }
        let map = if lower == upper {
            ColumnMap::Fixed(lower)
        } else if lower.is_finite() {
            col_upper.push(upper - lower);
            ColumnMap::Shifted {
                col: col_upper.len() - 1,
                lower,
            }
        } else if upper.is_finite() {
            col_upper.push(f64::INFINITY);
            ColumnMap::Mirrored {
                col: col_upper.len() - 1,
                upper,
            }
        } else {
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
            ColumnMap::Split {
                pos: col_upper.len() - 2,
                neg: col_upper.len() - 1,
            }
        };
        maps.push(map);
    }
    let structural = col_upper.len();

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; structural];
    for (j, &c) in lp.objective().iter().enumerate() {
        let c = sign * c;
        match maps[j] {
            ColumnMap::Fixed(_) => {}
            ColumnMap::Shifted { col, .. } => cost[col] += c,
            ColumnMap::Mirrored { col, .. } => cost[col] -= c,
            ColumnMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // Rows over structural columns, rhs made nonnegative.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(lp.constraints().len());
    for c in lp.constraints() {
        let mut row = vec![0.0; structural];
        let mut rhs = c.rhs;
        for &(v, a) in &c.terms {
            match maps[v.0] {
                ColumnMap::Fixed(x) => rhs -= a * x,
                ColumnMap::Shifted { col, lower } => {
                    row[col] += a;
                    rhs -= a * lower;
                }
                ColumnMap::Mirrored { col, upper } => {
                    row[col] -= a;
                    rhs -= a * upper;
                }
                ColumnMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        if row.iter().all(|&a| a == 0.0) {
            let tol = config.feasibility_tol * (1.0 + c.rhs.abs());
            let ok = match c.relation {
                Relation::Le => rhs >= -tol,
                Relation::Ge => rhs <= tol,
                Relation::Eq => rhs.abs() <= tol,
            };
            if !ok {
                return LpOutcome {
                    status: Status::Infeasible,
                    values: Vec::new(),
                    iterations: 0,
                };
            }
            continue;
        }
        let mut relation = c.relation;
        if rhs < 0.0 {
            row.iter_mut().for_each(|a| *a = -*a);
            rhs = -rhs;
            relation = relation.flipped();
        }
        rows.push((row, relation, rhs));
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let n = structural + slacks + artificials;
    let mut tab = Tableau::new(m, n);
    tab.upper[..structural].copy_from_slice(&col_upper);
    let mut next_slack = structural;
    let mut next_art = structural + slacks;
    for (i, (row, relation, rhs)) in rows.into_iter().enumerate() {
        tab.a[i * n..i * n + structural].copy_from_slice(&row);
        tab.beta[i] = rhs;
        match relation {
            Relation::Le => {
                tab.a[i * n + next_slack] = 1.0;
                tab.basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                tab.a[i * n + next_slack] = -1.0;
                next_slack += 1;
                tab.a[i * n + next_art] = 1.0;
                tab.basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                tab.a[i * n + next_art] = 1.0;
                tab.basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    let art_start = structural + slacks;

    let mut iterations = 0usize;
    if artificials > 0 {
        let mut phase_one = vec![0.0; n];
        phase_one[art_start..].iter_mut().for_each(|c| *c = 1.0);
        tab.price(&phase_one);
        match tab.run(config, &mut iterations) {
            PhaseEnd::Optimal => {}
            PhaseEnd::IterationLimit => {
                return LpOutcome {
                    status: Status::IterationLimit,
                    values: Vec::new(),
                    iterations,
                }
            }
            // Phase one is bounded below by zero.
            PhaseEnd::Unbounded => unreachable!("phase one cannot be unbounded"),
        }
        let infeasibility: f64 = (0..tab.m)
            .filter(|&i| tab.basis[i] >= art_start)
            .map(|i| tab.beta[i])
            .sum();
        let scale = tab.beta.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        if infeasibility > config.feasibility_tol * scale {
            return LpOutcome {
                status: Status::Infeasible,
                values: Vec::new(),
                iterations,
            };
        }
        tab.drive_out_artificials(art_start, config);
        for j in art_start..n {
            tab.blocked[j] = true;
        }
    }

    let mut full_cost = vec![0.0; n];
    full_cost[..structural].copy_from_slice(&cost);
    tab.price(&full_cost);
    let status = match tab.run(config, &mut iterations) {
        PhaseEnd::Optimal => Status::Optimal,
        PhaseEnd::Unbounded => Status::Unbounded,
        PhaseEnd::IterationLimit => Status::IterationLimit,
    };
    if status != Status::Optimal {
        return LpOutcome {
            status,
            values: Vec::new(),
            iterations,
        };
    }

    let cols = tab.column_values();
    let values = maps
        .iter()
        .map(|map| match *map {
            ColumnMap::Fixed(x) => x,
            ColumnMap::Shifted { col, lower } => lower + cols[col],
            ColumnMap::Mirrored { col, upper } => upper - cols[col],
            ColumnMap::Split { pos, neg } => cols[pos] - cols[neg],
        })
        .collect();
    LpOutcome {
        status: Status::Optimal,
        values,
        iterations,
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m x n` matrix `B^-1 A`.
    a: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    blocked: Vec<bool>,
    /// Reduced costs.
    d: Vec<f64>,
}

impl Tableau {
    fn new(m: usize, n: usize) -> Self {
        Tableau {
            m,
            n,
            a: vec![0.0; m * n],
            beta: vec![0.0; m],
            basis: vec![0; m],
            upper: vec![f64::INFINITY; n],
            at_upper: vec![false; n],
            is_basic: vec![false; n],
            blocked: vec![false; n],
            d: vec![0.0; n],
        }
    }

    fn price(&mut self, cost: &[f64]) {
        self.is_basic.iter_mut().for_each(|b| *b = false);
        for &b in &self.basis {
            self.is_basic[b] = true;
        }
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.n..(i + 1) * self.n];
                for (dj, aij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
    }

    fn value_of_nonbasic(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n).map(|j| self.value_of_nonbasic(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[i];
        }
        x
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if self.is_basic[j] || self.blocked[j] {
                continue;
            }
            let dj = self.d[j];
            let improving = if self.at_upper[j] { dj > tol } else { dj < -tol };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, score)| dj.abs() > score) {
                best = Some((j, dj.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    fn run(&mut self, config: &SolverConfig, iterations: &mut usize) -> PhaseEnd {
        let mut degenerate_streak = 0usize;
        loop {
            let bland = degenerate_streak >= config.bland_after;
            let Some(entering) = self.choose_entering(bland, config.optimality_tol) else {
                return PhaseEnd::Optimal;
            };
            if *iterations >= config.max_iterations {
                return PhaseEnd::IterationLimit;
            }
            *iterations += 1;
            let direction = if self.at_upper[entering] { -1.0 } else { 1.0 };

            // Ratio test: the entering column may hit its own opposite bound
            // (a flip) or drive a basic variable to one of its bounds.
            let mut theta = self.upper[entering];
            let mut leaving: Option<(usize, bool)> = None;
            let mut leaving_rate = 0.0f64;
            for i in 0..self.m {
                let rate = direction * self.a[i * self.n + entering];
                let (limit, to_upper) = if rate > config.pivot_tol {
                    (self.beta[i] / rate, false)
                } else if rate < -config.pivot_tol && self.upper[self.basis[i]].is_finite() {
                    ((self.upper[self.basis[i]] - self.beta[i]) / -rate, true)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let tie_tol = 1e-12 * theta.abs().max(1.0);
                let better = if limit < theta - tie_tol {
                    true
                } else if limit <= theta + tie_tol {
                    match leaving {
                        None => true,
                        Some((r, _)) if bland => self.basis[i] < self.basis[r],
                        Some(_) => rate.abs() > leaving_rate,
                    }
                } else {
                    false
                };
                if better {
                    theta = limit.min(theta);
                    leaving = Some((i, to_upper));
                    leaving_rate = rate.abs();
                }
            }
            if theta.is_infinite() {
                return PhaseEnd::Unbounded;
            }
            if theta <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            if theta > 0.0 {
                for i in 0..self.m {
                    let aij = self.a[i * self.n + entering];
                    if aij != 0.0 {
                        self.beta[i] -= direction * aij * theta;
                    }
                }
            }
            match leaving {
                None => {
                    self.at_upper[entering] = !self.at_upper[entering];
                }
                Some((r, to_upper)) => {
                    let entering_value = if direction > 0.0 {
                        theta
                    } else {
                        self.upper[entering] - theta
                    };
                    let old = self.basis[r];
                    self.at_upper[old] = to_upper;
                    self.pivot(r, entering);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let piv = self.a[r * n + j];
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let pivot_row: Vec<f64> = self.a[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.a[i * n + j];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[j] = 0.0;
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (v, p) in self.d.iter_mut().zip(&pivot_row) {
                *v -= dj * p;
            }
            self.d[j] = 0.0;
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.at_upper[j] = false;
    }

    /// After a feasible phase one, replaces basic artificials (all at zero)
    /// by structural or slack columns, dropping rows that turn out redundant.
    fn drive_out_artificials(&mut self, art_start: usize, config: &SolverConfig) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] < art_start {
                i += 1;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                if self.is_basic[j] {
                    continue;
                }
                let v = self.a[i * self.n + j].abs();
                if v > config.pivot_tol && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => {
                    let value = self.value_of_nonbasic(j);
                    self.pivot(i, j);
                    self.beta[i] = value;
                    i += 1;
                }
                None => self.remove_row(i),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let n = self.n;
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.a.drain(r * n..(r + 1) * n);
        self.beta.remove(r);
        self.basis.remove(r);
        self.m -= 1;
    }
}
