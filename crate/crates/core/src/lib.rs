//! Vortex and coupled-vortex equations on flat complex tori of dimension one
//! and two: Yang-Mills-Higgs energies, certified solvers, the dimensional
//! reduction to `M × P¹`, local energy analysis and slope stability.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix `f64`.

pub mod analysis;
pub mod dimred;
pub mod error;
pub mod fields;
pub mod functional;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod solvers;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Torus = geometry::TorusGeometry<f64>;
pub type Connection = fields::ConnectionState<f64>;
pub type State = fields::FieldState<f64>;
pub type Grid = grid::Field<f64>;
pub type Solution = solvers::VortexSolution<f64>;
pub type Artifact = io::SolutionArtifact<f64>;
