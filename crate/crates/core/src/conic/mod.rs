//! Self-contained convex solver for diagonal-quadratic-plus-linear
//! objectives over nonnegative and second-order cone constraints.

pub mod program;
pub mod solver;

pub use program::{
    assemble, dump_cone, parse_cone, ConeBlock, ConeProgram, ConicError, Objective,
};
pub use solver::{solve, ConicSolution, SolveStatus, DEFAULT_MAX_ITER, DEFAULT_TOL};
