//! Collision-tolerant minimum-time trajectory planning for a 1-D double
//! integrator near a wall.
//!
//! The crate carries its own small LP solver (bounded-variable two-phase
//! simplex) and a branch-and-bound MILP solver over binary variables, a model
//! builder that encodes contact with big-M constraints, a minimum-horizon
//! planner, and an independent verification layer.

pub mod cli;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod solver;

pub use model::{BigM, ConfigError, PlanningConfig, VariableLayout};
pub use planner::{Mode, PlanError, TrajectoryPlan};
pub use solver::{
    solve_lp, solve_milp, LpProblem, LpSolution, LpStatus, MilpProblem, MilpSolution,
    MilpStatus, Sense, SolverError, SolverOptions,
};
