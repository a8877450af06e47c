//! Finite-difference engine on a `(t, x)` grid.

mod cfl;
mod field;
mod grid;
mod scheme;
mod tree;

pub use cfl::{auto_steps, cfl_from_bounds, cfl_timestep};
pub use field::Field;
pub use grid::Grid;
pub use scheme::{
    derivative_fields, run_backward, solve_backward, solve_hjb, BackwardOptions, BackwardOutput, Boundary,
    ControlMode, HJBSolution, ARGMAX_TOL,
};
pub use tree::{
    brute_force_tree_expectation, tree_expectation, tree_expectation_with, DEFAULT_C3, ENUMERATION_LIMIT, MAX_DEPTH,
};
