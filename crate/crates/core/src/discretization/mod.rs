//! Structured grids and the matrix-free diffuse domain operator.

mod grid;
mod operator;

pub use grid::{DiscreteField, Grid};
pub(crate) use grid::lagrange4;
pub(crate) use operator::weighted_l2;
pub use operator::{apply, build_operator, build_operator_from_distance, build_rhs, build_rhs_from_distance, residual, residual_norms, DiscreteOperator};
