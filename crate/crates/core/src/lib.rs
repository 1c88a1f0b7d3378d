//! Iteratively reweighted l1 minimization for lp-regularized (0 < p ≤ 1)
//! problems over structured feasible sets, with first-order optimality
//! certification.
//!
//! * [`calculus`]: subdifferentials of `‖x‖ₚᵖ`, normal cones of the lp ball,
//!   smoothing weights.
//! * [`subproblem`]: exact solvers for the weighted-l1 proximal subproblems.
//! * [`solver`]: the reweighted outer loop with descent verification.
//! * [`optimality`]: KKT, AKKT, EMFCQ and horizon-obstruction checks.

pub mod calculus;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod optimality;
pub mod problem;
pub mod solver;
pub mod subproblem;

pub use error::{Error, Result};
pub use problem::{
    Affine, Constraint, ConstraintKind, FeasibleSet, FnOracle, LpRegularizer, MultiplierSet, ProblemKind,
    Quadratic, SmoothOracle, Strength,
};
pub use solver::{solve, Irl1Solver, Iterate, SolveReport, SolverParams, Termination};
pub use subproblem::{ExactSubproblem, SubproblemInput, SubproblemOracle, SubproblemSolution};
