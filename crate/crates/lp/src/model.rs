//! Problem description shared by the LP and 0-1 MILP solvers.

use std::fmt;

use crate::LpError;

/// Index of a variable inside a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    pub(crate) fn flipped(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Left-hand side evaluated at `values`.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A linear program with optional 0-1 variables.
///
/// Variables carry their own bounds; `f64::INFINITY` / `f64::NEG_INFINITY`
/// stand for a missing bound. Constraint rows are stored sparsely and may
/// mention a variable more than once (terms are summed).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    pub sense: Sense,
    variables: Vec<Variable>,
    objective: Vec<f64>,
    objective_offset: f64,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            name: String::from("lp"),
            sense,
            variables: Vec::new(),
            objective: Vec::new(),
            objective_offset: 0.0,
            constraints: Vec::new(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            binary: false,
        });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    /// Nonnegative continuous variable without an upper bound.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, f64::INFINITY)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            binary: true,
        });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] = coefficient;
    }

    pub fn add_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] += coefficient;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn has_binaries(&self) -> bool {
        self.variables.iter().any(|v| v.binary)
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary)
            .map(|(i, _)| VarId(i))
    }

    /// Objective value of an arbitrary point, offset included.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Copy of the program with every binary flag cleared (the LP relaxation).
    pub fn relaxation(&self) -> LinearProgram {
        let mut lp = self.clone();
        for v in &mut lp.variables {
            v.binary = false;
        }
        lp
    }

    /// Reorders the variables: variable `k` of the result is variable
    /// `order[k]` of `self`. Rows and objective are remapped accordingly.
    pub fn permute_variables(&self, order: &[usize]) -> Result<LinearProgram, LpError> {
        let n = self.variables.len();
        let mut inverse = vec![usize::MAX; n];
        if order.len() != n {
            return Err(LpError::BadPermutation);
        }
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(LpError::BadPermutation);
            }
            inverse[old] = new;
        }
        let variables = order.iter().map(|&old| self.variables[old].clone()).collect();
        let objective = order.iter().map(|&old| self.objective[old]).collect();
        let constraints = self
            .constraints
            .iter()
            .map(|c| Constraint {
                name: c.name.clone(),
                terms: c.terms.iter().map(|&(v, a)| (VarId(inverse[v.0]), a)).collect(),
                relation: c.relation,
                rhs: c.rhs,
            })
            .collect();
        Ok(LinearProgram {
            name: self.name.clone(),
            sense: self.sense,
            variables,
            objective,
            objective_offset: self.objective_offset,
            constraints,
        })
    }

    pub(crate) fn validate(&self) -> Result<(), LpError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::InconsistentBounds {
                    var: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InconsistentBounds {
                    var: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(LpError::BinaryBounds(v.name.clone()));
            }
            if !self.objective[i].is_finite() {
                return Err(LpError::NonFinite(format!("objective coefficient of {}", v.name)));
            }
        }
        if !self.objective_offset.is_finite() {
            return Err(LpError::NonFinite("objective offset".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("right-hand side of {}", c.name)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(LpError::UnknownVariable(c.name.clone()));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("coefficient in {}", c.name)));
                }
            }
        }
        Ok(())
    }
}
