use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use crate::error::{LpError, Result};
use crate::model::{LinearModel, Violation, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    TimeLimit,
    NodeLimit,
}

impl Status {
    /// True when `values` hold a usable point (proven optimal or best incumbent).
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::GapLimit | Status::TimeLimit | Status::NodeLimit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::GapLimit => "gap-limit",
            Status::TimeLimit => "time-limit",
            Status::NodeLimit => "node-limit",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of an LP or MILP solve, or of importing an external solution.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: Status,
    /// Objective in the model's own sense, including the constant term.
    pub objective: f64,
    /// One value per model variable. For an infeasible LP this is the
    /// least-infeasible point reached by phase 1; otherwise empty when no
    /// point is available.
    pub values: Vec<f64>,
    /// Best proven bound on the objective (equals `objective` for LPs).
    pub best_bound: f64,
    pub relative_gap: f64,
    pub nodes_explored: usize,
    pub simplex_iterations: usize,
    pub wall_time: Duration,
}

impl MilpSolution {
    pub(crate) fn without_point(status: Status, wall_time: Duration) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            best_bound: f64::NAN,
            relative_gap: f64::INFINITY,
            nodes_explored: 0,
            simplex_iterations: 0,
            wall_time,
        }
    }

    pub fn value(&self, v: crate::VarId) -> f64 {
        self.values[v.0]
    }
}

/// Outcome of [`import_solution`]: the recomputed solution plus the
/// feasibility verdict against the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedSolution {
    pub solution: MilpSolution,
    pub feasible: bool,
    pub worst_violation: Violation,
    pub integral: bool,
}

/// Reads `name value` lines produced by an external solver.
///
/// `#` starts a comment; blank lines are ignored. Every model variable must
/// appear exactly once. The objective is recomputed from the values and the
/// point is checked against every bound and row.
pub fn import_solution(model: &LinearModel, text: &str) -> Result<ImportedSolution> {
    let index: HashMap<&str, usize> = model.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut values = vec![f64::NAN; model.num_vars()];
    let mut seen = vec![false; model.num_vars()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (name, val) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(v), None) => (n, v),
            _ => {
                return Err(LpError::Parse {
                    line: lineno + 1,
                    message: format!("expected `name value`, got `{line}`"),
                })
            }
        };
        let &i = index
            .get(name)
            .ok_or_else(|| LpError::Parse { line: lineno + 1, message: format!("unknown variable `{name}`") })?;
        let x: f64 = val.parse().map_err(|_| LpError::Parse {
            line: lineno + 1,
            message: format!("cannot parse value `{val}` for `{name}`"),
        })?;
        if seen[i] {
            return Err(LpError::Parse { line: lineno + 1, message: format!("duplicate variable `{name}`") });
        }
        seen[i] = true;
        values[i] = x;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(LpError::Parse {
            line: text.lines().count(),
            message: format!("missing value for variable `{}`", model.vars[missing].name),
        });
    }
    let worst = model.max_violation(&values);
    let integral = model.integral(&values, 1e-6);
    let feasible = worst.within(FEAS_TOL) && integral;
    let objective = model.evaluate_objective(&values);
    Ok(ImportedSolution {
        solution: MilpSolution {
            status: if feasible { Status::Optimal } else { Status::Infeasible },
            objective,
            values,
            best_bound: objective,
            relative_gap: 0.0,
            nodes_explored: 0,
            simplex_iterations: 0,
            wall_time: Duration::ZERO,
        },
        feasible,
        worst_violation: worst,
        integral,
    })
}

/// Writes a solution in the `name value` format read by [`import_solution`].
pub fn write_solution(model: &LinearModel, values: &[f64]) -> String {
    let mut out = String::new();
    for (v, x) in model.vars.iter().zip(values) {
        out.push_str(&format!("{} {:e}\n", v.name, x));
    }
    out
}
