//! Discrete fractional Sobolev constants on piecewise-linear finite elements
//! over the unit ball, with the tooling to measure how fast they approach the
//! sharp constant.

pub mod bubble;
pub mod error;
pub mod experiments;
pub mod gagliardo;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 instantiations of the generic types.
pub type Mesh = mesh::BallMesh<f64>;
pub type Function = mesh::FeFunction<f64>;
pub type Form = gagliardo::NonlocalForm<f64>;
pub type Params = params::ProblemParams<f64>;
pub type Bubble = bubble::Bubble<f64>;
pub type Solution = solver::SolverReport<f64>;
pub type Fit = solver::ManifoldFit<f64>;
