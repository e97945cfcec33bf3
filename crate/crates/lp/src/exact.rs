//! Exact rational reconstruction of a simplex vertex.
//!
//! Floating-point simplex runs that end on different optimal vertices (or on
//! the same vertex via a different pivot sequence) report objectives that
//! agree only up to rounding. Re-deriving the vertex from its active
//! constraints in exact arithmetic gives a value that depends only on the
//! vertex, and the optimal objective that depends only on the program.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::{LinearProgram, Relation};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPoint {
    pub values: Vec<BigRational>,
    pub objective: BigRational,
}

impl ExactPoint {
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(to_f64).collect()
    }

    pub fn objective_f64(&self) -> f64 {
        to_f64(&self.objective)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

/// Recomputes `values` exactly as the unique solution of the constraints
/// and bounds that are tight within `tol`. Returns `None` when the tight set
/// does not pin down a single feasible point.
pub fn exact_vertex(lp: &LinearProgram, values: &[f64], tol: f64) -> Option<ExactPoint> {
    let n = lp.num_vars();
    if values.len() != n {
        return None;
    }
    let mut equations: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    for c in lp.constraints() {
        let lhs = c.activity(values);
        if c.relation == Relation::Eq || (lhs - c.rhs).abs() <= tol * (1.0 + c.rhs.abs()) {
            let mut row = vec![BigRational::zero(); n];
            for &(v, a) in &c.terms {
                row[v.index()] += rational(a);
            }
            equations.push((row, rational(c.rhs)));
        }
    }
    for (j, var) in lp.variables().iter().enumerate() {
        for bound in [var.lower, var.upper] {
            if bound.is_finite() && (values[j] - bound).abs() <= tol * (1.0 + bound.abs()) {
                equations.push((unit(n, j), rational(bound)));
                break;
            }
        }
    }

    let mut solution = solve_exact(&equations, n);
    if solution.is_none() {
        // Free columns sitting at zero are nonbasic in the split form but
        // not pinned by any original bound.
        for (j, &x) in values.iter().enumerate() {
            if x.abs() <= tol {
                equations.push((unit(n, j), BigRational::zero()));
            }
        }
        solution = solve_exact(&equations, n);
    }
    let x = solution?;
    if !feasible(lp, &x) {
        return None;
    }
    let mut objective = rational(lp.objective_offset());
    for (c, xj) in lp.objective().iter().zip(&x) {
        if *c != 0.0 {
            objective += rational(*c) * xj;
        }
    }
    Some(ExactPoint {
        values: x,
        objective,
    })
}

fn unit(n: usize, j: usize) -> Vec<BigRational> {
    let mut row = vec![BigRational::zero(); n];
    row[j] = BigRational::from_integer(BigInt::from(1));
    row
}

fn feasible(lp: &LinearProgram, x: &[BigRational]) -> bool {
    for (j, var) in lp.variables().iter().enumerate() {
        if var.lower.is_finite() && x[j] < rational(var.lower) {
            return false;
        }
        if var.upper.is_finite() && x[j] > rational(var.upper) {
            return false;
        }
    }
    lp.constraints().iter().all(|c| {
        let mut lhs = BigRational::zero();
        for &(v, a) in &c.terms {
            lhs += rational(a) * &x[v.index()];
        }
        let rhs = rational(c.rhs);
        match c.relation {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    })
}

/// Gauss-Jordan elimination; `None` unless the system is consistent with a
/// unique solution.
fn solve_exact(equations: &[(Vec<BigRational>, BigRational)], n: usize) -> Option<Vec<BigRational>> {
    let mut rows: Vec<Vec<BigRational>> = equations
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivot_cols = Vec::with_capacity(n);
    for col in 0..n {
        let Some(p) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, p);
        let piv = rows[pivot_row][col].clone();
        for v in rows[pivot_row].iter_mut() {
            *v /= &piv;
        }
        let pr = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pr) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
    }
    if rows[pivot_row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    if pivot_cols.len() < n {
        return None;
    }
    Some((0..n).map(|i| rows[i][n].clone()).collect())
}
