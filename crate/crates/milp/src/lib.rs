//! Exact mixed 0/1 linear programming for small models.
//!
//! The solver is generic over the [`Scalar`] type (`f32` or `f64`); the
//! `f64` instantiations are re-exported under short aliases.

mod branch;
mod model;
mod scalar;
mod simplex;

pub use branch::{lp_relax_solve, solve, Limit, MilpSolution, SolveStatus};
pub use model::{Constraint, MilpModel, ModelError, Relation, VarId, VarKind, Variable};
pub use scalar::Scalar;

pub type Model = MilpModel<f64>;
pub type Solution = MilpSolution<f64>;
