//! Small, deterministic linear and 0-1 mixed-integer programming.
//!
//! [`solve_lp`] runs a dense two-phase bounded-variable simplex;
//! [`solve_milp`] wraps it in a best-bound branch-and-bound over the binary
//! variables. Both are sized for problems with at most a few hundred columns.

mod branch;
pub mod exact;
pub mod lp_format;
mod model;
mod simplex;

pub use branch::solve_milp;
pub use model::{Constraint, LinearProgram, Relation, Sense, VarId, Variable};
pub use simplex::solve_lp;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable {var} has inconsistent bounds [{lower}, {upper}]")]
    InconsistentBounds { var: String, lower: f64, upper: f64 },
    #[error("binary variable {0} must be bounded within [0, 1]")]
    BinaryBounds(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("constraint {0} references an unknown variable")]
    UnknownVariable(String),
    #[error("solve_lp called on a program with binary variables; use solve_milp")]
    BinaryInLp,
    #[error("variable order is not a permutation")]
    BadPermutation,
}

/// Numerical tolerances and work limits.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    pub max_nodes: u64,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub bland_after: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            integrality_tol: 1e-6,
            pivot_tol: 1e-9,
            max_iterations: 50_000,
            max_nodes: 1_000_000,
            bland_after: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
            Status::NodeLimit => "node-limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    /// One value per variable; empty when no point was found.
    pub values: Vec<f64>,
    /// Objective at `values`, recomputed from the original program.
    pub objective: f64,
    /// Simplex pivots and bound flips (summed over all nodes for MILPs).
    pub iterations: usize,
    /// LP relaxations solved; 1 for a pure LP.
    pub nodes: u64,
    /// Best remaining bound minus incumbent, in the objective's sense. Zero
    /// when optimality is proven.
    pub gap: f64,
    /// `(node, objective)` each time the incumbent improved.
    pub incumbent_trace: Vec<(u64, f64)>,
}

impl SolveReport {
    pub(crate) fn without_point(status: Status, iterations: usize, nodes: u64) -> Self {
        SolveReport {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            iterations,
            nodes,
            gap: f64::INFINITY,
            incumbent_trace: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}
