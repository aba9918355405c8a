//! Linear and mixed-binary programming for small dense models.
//!
//! [`LinearModel`] describes a problem, [`solve_lp`] solves its continuous
//! relaxation, [`solve_milp`] runs best-first branch and bound over the binary
//! variables, and [`export_mps`] / [`import_solution`] exchange models and
//! points with external solvers.

mod bnb;
mod error;
mod model;
mod mps;
mod scaling;
mod simplex;
mod solution;

pub use bnb::{solve_milp, MilpConfig};
pub use error::{LpError, Result};
pub use model::{
    Constraint, LinearModel, ObjSense, RowId, RowSense, VarId, VarKind, Variable, Violation, ViolationAt, FEAS_TOL,
};
pub use mps::{export_mps, parse_mps, MpsNames};
pub use solution::{import_solution, write_solution, ImportedSolution, MilpSolution, Status};

use std::time::Instant;

/// Solves the continuous relaxation of `model` (binary markers are ignored).
///
/// An infeasible LP returns [`Status::Infeasible`] together with the
/// least-infeasible point found, which callers may use for diagnosis.
pub fn solve_lp(model: &LinearModel) -> Result<MilpSolution> {
    model.validate()?;
    let start = Instant::now();
    let mut spx = simplex::Simplex::new(model);
    let outcome = spx.optimize();
    let mut sol = MilpSolution::without_point(Status::Optimal, start.elapsed());
    sol.simplex_iterations = spx.iterations;
    match outcome {
        simplex::Outcome::Optimal => {
            sol.values = spx.values();
            sol.objective = model.evaluate_objective(&sol.values);
            sol.best_bound = sol.objective;
            sol.relative_gap = 0.0;
        }
        simplex::Outcome::Infeasible => {
            sol.status = Status::Infeasible;
            sol.values = spx.values();
        }
        simplex::Outcome::Unbounded => sol.status = Status::Unbounded,
        simplex::Outcome::IterationLimit => {
            return Err(LpError::Numerical(format!(
                "simplex iteration limit reached on `{}` ({} iterations)",
                model.name, spx.iterations
            )))
        }
        simplex::Outcome::TimeLimit => sol.status = Status::TimeLimit,
    }
    Ok(sol)
}
