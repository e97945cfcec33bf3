//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes are LP relaxations with some binaries fixed. The open node with the
//! best parent bound is expanded first (FIFO among equal bounds); the
//! branching variable is the most fractional binary, lowest index on ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::simplex::solve_with_bounds;
use crate::{LinearProgram, LpError, Sense, SolveReport, SolverConfig, Status};

struct OpenNode {
    /// Parent relaxation value, oriented so that larger is better.
    score: f64,
    seq: u64,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    score: f64,
    values: Vec<f64>,
}

/// Solves a program whose binary variables must take values in {0, 1}.
/// Programs without binaries are solved as a single relaxation.
pub fn solve_milp(lp: &LinearProgram, config: &SolverConfig) -> Result<SolveReport, LpError> {
    lp.validate()?;
    let orient = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let base: Vec<(f64, f64)> = lp.variables().iter().map(|v| (v.lower, v.upper)).collect();
    let binaries: Vec<usize> = lp.binaries().map(|v| v.index()).collect();

    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        score: f64::INFINITY,
        seq: 0,
        fixes: Vec::new(),
    });
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut iterations = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    let mut trace = Vec::new();
    let mut unbounded = false;
    let mut limit_hit: Option<Status> = None;

    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            if node.score <= inc.score + prune_tol(inc.score) {
                continue;
            }
        }
        if nodes >= config.max_nodes {
            heap.push(node);
            limit_hit = Some(Status::NodeLimit);
            break;
        }
        nodes += 1;

        let mut bounds = base.clone();
        for &(j, v) in &node.fixes {
            bounds[j] = (v, v);
        }
        let outcome = solve_with_bounds(lp, &bounds, config);
        iterations += outcome.iterations;
        match outcome.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => {
                unbounded = true;
                break;
            }
            other => {
                heap.push(node);
                limit_hit = Some(other);
                break;
            }
        }
        let values = outcome.values;
        let score = orient * lp.evaluate(&values);
        if let Some(inc) = &incumbent {
            if score <= inc.score + prune_tol(inc.score) {
                continue;
            }
        }

        let branch_var = most_fractional(&binaries, &values, config.integrality_tol);
        match branch_var {
            None => {
                let (values, score) = polish(lp, &base, &binaries, values, score, config);
                if incumbent.as_ref().map_or(true, |inc| score > inc.score) {
                    trace.push((nodes, orient * score));
                    incumbent = Some(Incumbent { score, values });
                }
            }
            Some(j) => {
                let nearest = values[j].round();
                for v in [nearest, 1.0 - nearest] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, v));
                    heap.push(OpenNode { score, seq, fixes });
                    seq += 1;
                }
            }
        }
    }

    if unbounded {
        return Ok(SolveReport::without_point(Status::Unbounded, iterations, nodes));
    }
    let best_open = heap
        .iter()
        .map(|n| n.score)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(match (incumbent, limit_hit) {
        (Some(inc), limit) => {
            let gap = if limit.is_some() {
                (best_open - inc.score).max(0.0)
            } else {
                0.0
            };
            SolveReport {
                status: limit.unwrap_or(Status::Optimal),
                objective: lp.evaluate(&inc.values),
                values: inc.values,
                iterations,
                nodes,
                gap,
                incumbent_trace: trace,
            }
        }
        (None, Some(limit)) => SolveReport::without_point(limit, iterations, nodes),
        (None, None) => SolveReport::without_point(Status::Infeasible, iterations, nodes),
    })
}

fn prune_tol(score: f64) -> f64 {
    1e-9 * score.abs().max(1.0)
}

fn most_fractional(binaries: &[usize], values: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let frac = (values[j] - values[j].round()).abs();
        if frac > tol && best.map_or(true, |(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

/// Rounds the binaries of an integral relaxation and re-solves the remaining
/// continuous part so that the reported point is exactly 0-1.
fn polish(
    lp: &LinearProgram,
    base: &[(f64, f64)],
    binaries: &[usize],
    mut values: Vec<f64>,
    score: f64,
    config: &SolverConfig,
) -> (Vec<f64>, f64) {
    let orient = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut bounds = base.to_vec();
    for &j in binaries {
        let v = values[j].round();
        bounds[j] = (v, v);
        values[j] = v;
    }
    if binaries.len() == lp.num_vars() {
        let s = orient * lp.evaluate(&values);
        return (values, s);
    }
    let outcome = solve_with_bounds(lp, &bounds, config);
    if outcome.status == Status::Optimal {
        let s = orient * lp.evaluate(&outcome.values);
        (outcome.values, s)
    } else {
        (values, score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relation;

    #[test]
    fn two_item_knapsack() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let a = lp.add_binary("a");
        let b = lp.add_binary("b");
        lp.set_objective(a, 3.0);
        lp.set_objective(b, 2.0);
        lp.add_constraint("cap", vec![(a, 2.0), (b, 2.0)], Relation::Le, 3.0);
        let r = solve_milp(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.objective, 3.0);
        assert_eq!(r.values, vec![1.0, 0.0]);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn integral_relaxation_needs_only_the_root() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let a = lp.add_binary("a");
        let b = lp.add_binary("b");
        lp.set_objective(a, 1.0);
        lp.set_objective(b, 1.0);
        lp.add_constraint("one", vec![(a, 1.0), (b, 1.0)], Relation::Le, 1.0);
        let r = solve_milp(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.nodes, 1);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let a = lp.add_binary("a");
        let b = lp.add_binary("b");
        lp.add_constraint("half", vec![(a, 2.0), (b, 2.0)], Relation::Eq, 1.0);
        let r = solve_milp(&lp, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Infeasible);
    }

    #[test]
    fn node_limit_keeps_incumbent_and_gap() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars: Vec<_> = (0..12).map(|i| lp.add_binary(format!("x{i}"))).collect();
        for (i, &v) in vars.iter().enumerate() {
            lp.set_objective(v, 10.0 + i as f64);
        }
        let terms = vars.iter().enumerate().map(|(i, &v)| (v, 7.0 + 2.0 * i as f64)).collect();
        lp.add_constraint("cap", terms, Relation::Le, 50.5);
        let cfg = SolverConfig {
            max_nodes: 3,
            ..SolverConfig::default()
        };
        let r = solve_milp(&lp, &cfg).unwrap();
        assert_eq!(r.status, Status::NodeLimit);
        assert_eq!(r.nodes, 3);
        assert!(r.gap >= 0.0);
    }

    #[test]
    fn mixed_binary_continuous() {
        // max 5b + y, y <= 3b + 1, y <= 2.5
        let mut lp = LinearProgram::new(Sense::Maximize);
        let b = lp.add_binary("b");
        let y = lp.add_var("y", 0.0, 2.5);
        lp.set_objective(b, 5.0);
        lp.set_objective(y, 1.0);
        lp.add_constraint("link", vec![(y, 1.0), (b, -3.0)], Relation::Le, 1.0);
        let r = solve_milp(&lp, &SolverConfig::default()).unwrap();
        assert!((r.objective - 7.5).abs() < 1e-9);
        assert_eq!(r.values[0], 1.0);
    }
}
