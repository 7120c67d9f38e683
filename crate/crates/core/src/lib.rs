//! Diffuse domain solver for two-sided elliptic transmission problems.
//!
//! The crate covers the whole pipeline: interface geometry and signed
//! distance fields, the tanh phase field and diffuse coefficients, a
//! cell-centered finite difference operator, a geometric multigrid solver,
//! a sharp-interface 1D reference with its first-order asymptotic
//! correction, and the convergence studies built on top of them.

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod model;
pub mod multigrid;
pub mod phasefield;
pub mod reference;

/// A point in the plane. One-dimensional code uses the first coordinate only.
pub type Point = [f64; 2];

pub use analysis::{ConvergenceRow, ConvergenceTable, RateFit, Subdomain};
pub use discretization::{DiscreteField, DiscreteOperator, Grid};
pub use error::{Error, Result};
pub use geometry::{DistanceField, InterfaceGeometry};
pub use model::{ProblemSpec, SpatialFn, TestCase};
pub use multigrid::{MgConfig, MgHierarchy, SolveReport};
pub use phasefield::PhaseFieldParams;
pub use reference::{CorrectionSolution, MatchingConstants, SharpSolution};
