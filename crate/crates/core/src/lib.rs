//! Discrete Aubry–Mather theory on the flat torus.
//!
//! Minimizing measures of mechanical Lagrangians are computed as optimal
//! vertices of a linear program over discrete closed probability measures;
//! the affine dimension of the optimal face (on position marginals) measures
//! how many minimizers there are.

pub mod domain;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod holonomy;
pub mod lp;
pub mod mather;

pub use domain::{sample_random_potential, CohomologyClass, FourierMode, LagrangianSpec, PotentialSpec};
pub use error::{Error, Result};
pub use holonomy::{
    action_objective, build_closed_measure_constraints, build_state_space, closedness_residual,
    discrete_action, ConstraintSystem, DiscreteMeasure, DiscreteStateSpace, GridConfig, SparseMatrix,
};
pub use lp::{solve_lp, LinearProgram, LpStatus, OptimalSolution};
pub use mather::{
    alpha, beta, graph_property_check, minimize_action, rotation_vector, subdifferential_dimension,
    MatherResult,
};
