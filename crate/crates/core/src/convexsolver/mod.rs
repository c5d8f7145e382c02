//! Convex subproblem solvers used by the optimizer.

mod disk;
mod socp;

pub use disk::{maximize_concave_quadratic_over_disks, project_to_disks, DiskQpReport};
pub use socp::{solve_socp_max, SocConstraint, SocpProblem, SocpSettings, SolverReport, SolverStatus};
