//! Linear model construction.
//!
//! A [`MilpModel`] is always a minimisation. Maximisation problems are
//! expressed by negating the objective.

use std::fmt::Write as _;

use thiserror::Error;

use crate::Scalar;

/// Handle of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    Equal,
    GreaterEq,
}

#[derive(Debug, Clone)]
pub struct Variable<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    pub kind: VarKind,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub name: String,
    pub terms: Vec<(VarId, T)>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("constraint `{constraint}` references undeclared variable #{var}")]
    UnknownVariable { constraint: String, var: usize },
    #[error("objective references undeclared variable #{0}")]
    UnknownObjectiveVariable(usize),
    #[error("variable `{0}` has lower bound above upper bound")]
    InvertedBounds(String),
    #[error("binary variable `{0}` must have bounds [0, 1]")]
    BinaryBounds(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("budget must be positive")]
    EmptyBudget,
}

/// Mixed 0/1 linear program: `min c.x` subject to linear rows and variable bounds.
#[derive(Debug, Clone, Default)]
pub struct MilpModel<T> {
    vars: Vec<Variable<T>>,
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> MilpModel<T> {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: T, upper: T, kind: VarKind) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.objective.push(T::zero());
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, T::zero(), T::one(), VarKind::Binary)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: T, upper: T) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    /// Sets the objective coefficient of `var`, replacing any previous value.
    pub fn set_objective(&mut self, var: VarId, coef: T) {
        if let Some(c) = self.objective.get_mut(var.0) {
            *c = coef;
        } else {
            // Kept so that validation reports the bad reference.
            self.objective.resize(var.0 + 1, T::zero());
            self.objective[var.0] = coef;
        }
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, T)>,
        relation: Relation,
        rhs: T,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> &[Variable<T>] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable<T> {
        &self.vars[id.0]
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    /// Tightens the bounds of a variable, e.g. to pin a binary.
    pub fn set_bounds(&mut self, var: VarId, lower: T, upper: T) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.objective.len() > self.vars.len() {
            return Err(ModelError::UnknownObjectiveVariable(self.vars.len()));
        }
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower == T::infinity() || v.upper == T::neg_infinity() {
                return Err(ModelError::NonFinite(v.name.clone()));
            }
            if v.lower > v.upper {
                return Err(ModelError::InvertedBounds(v.name.clone()));
            }
            if v.kind == VarKind::Binary && (v.lower < T::zero() || v.upper > T::one()) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::NonFinite(self.vars[j].name.clone()));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite(c.name.clone()));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        constraint: c.name.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(c.name.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&c, &v)| acc + c * v)
    }

    /// Largest violation of any bound, integrality mark, or row under `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (v, &val) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - val).max(val - v.upper);
            if v.kind == VarKind::Binary {
                worst = worst.max((val - val.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs = c
                .terms
                .iter()
                .fold(T::zero(), |acc, &(v, a)| acc + a * x[v.0]);
            let viol = match c.relation {
                Relation::LessEq => lhs - c.rhs,
                Relation::GreaterEq => c.rhs - lhs,
                Relation::Equal => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Renders the model in CPLEX LP text format, for cross-checking with
    /// external solvers.
    pub fn to_lp_string(&self) -> String {
        let name = |j: usize| sanitize(&self.vars[j].name, j);
        let mut out = String::from("\\ generated by mtsp-milp\nMinimize\n obj:");
        let mut any = false;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != T::zero() {
                write_term(&mut out, c, &name(j));
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " {}:", sanitize(&c.name, i));
            if c.terms.is_empty() {
                out.push_str(" 0");
            }
            for &(v, a) in &c.terms {
                write_term(&mut out, a, &name(v.0));
            }
            let op = match c.relation {
                Relation::LessEq => "<=",
                Relation::Equal => "=",
                Relation::GreaterEq => ">=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for (j, v) in self.vars.iter().enumerate() {
            let lo = if v.lower.is_infinite() { "-inf".to_string() } else { v.lower.to_string() };
            let hi = if v.upper.is_infinite() { "+inf".to_string() } else { v.upper.to_string() };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", name(j));
        }
        let binaries: Vec<String> = (0..self.vars.len())
            .filter(|&j| self.vars[j].kind == VarKind::Binary)
            .map(name)
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for b in binaries {
                let _ = writeln!(out, " {b}");
            }
        }
        out.push_str("End\n");
        out
    }
}

fn write_term<T: Scalar>(out: &mut String, coef: T, name: &str) {
    if coef < T::zero() {
        let _ = write!(out, " - {} {}", -coef, name);
    } else {
        let _ = write!(out, " + {} {}", coef, name);
    }
}

fn sanitize(name: &str, fallback: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    match cleaned.chars().next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => cleaned,
        _ => format!("v{fallback}_{cleaned}"),
    }
}
