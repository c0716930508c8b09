pub mod constraint;
pub mod lp;
pub mod polyhedron;

pub use constraint::{AffineExpr, Coeffs, LinearConstraint, Relation};
pub use lp::{lp_feasible, optimize_closure, FarkasCertificate, LpOutcome, LpProblem, LpStatus, Objective, Sense};
pub use polyhedron::{project, project_with_budget, time_elapse, time_elapse_with_budget, BudgetExceeded, Polyhedron};
