//! Centralised and decentralised city allocation for the multiple
//! travelling salesmen problem.
//!
//! Geometry, routing, exchange and clustering are generic over the
//! [`Scalar`] type; the mechanisms and experiments run on `f64`, and the
//! aliases below name the `f64` instantiations.

pub mod clock;
pub mod clustering;
pub mod exchange;
pub mod geometry;
pub mod instance;
pub mod experiments;
pub mod mechanisms;
pub mod routing;
pub mod tsplib;

pub use mtsp_milp::{Limit, Scalar, SolveStatus};

pub type Point = geometry::Point<f64>;
pub type DistanceMatrix = geometry::DistanceMatrix<f64>;
pub type Instance = instance::Instance<f64>;
pub type Route = instance::Route<f64>;
pub use instance::{Allocation, Violation};
