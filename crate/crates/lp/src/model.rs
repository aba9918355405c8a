//! Solver-agnostic model representation.

use std::fmt;

use crate::error::{LpError, Result};

/// Absolute feasibility tolerance used when checking a point against a model.
pub const FEAS_TOL: f64 = 1e-7;

/// Index of a variable inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }

    /// Slack measured in the direction of feasibility (`Eq` rows report 0).
    pub fn slack(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            RowSense::Le => self.rhs - act,
            RowSense::Ge => act - self.rhs,
            RowSense::Eq => 0.0,
        }
    }

    /// Magnitude used to make violation checks scale-aware.
    fn magnitude(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| (a * values[v.0]).abs()).fold(self.rhs.abs(), f64::max)
    }
}

/// A mixed-binary linear program.
///
/// Variables and rows are addressed by dense ids in insertion order. The
/// model is plain data: builders mutate it, solvers only read it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
    pub sense: ObjSense,
}

impl LinearModel {
    pub fn new(name: impl Into<String>, sense: ObjSense) -> Self {
        Self {
            name: name.into(),
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable { name: name.into(), lower, upper, kind });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    /// Continuous variable in `[0, +inf)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, f64::INFINITY, VarKind::Continuous)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Appends a row. Duplicate variable entries are merged and exact zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in coeffs {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(e) => e.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let id = RowId(self.rows.len());
        self.rows.push(Constraint { name: name.into(), coeffs: merged, sense, rhs });
        id
    }

    pub fn set_objective(&mut self, coeffs: impl IntoIterator<Item = (VarId, f64)>, constant: f64) {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in coeffs {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(e) => e.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.objective = merged;
        self.objective_constant = constant;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn num_continuous(&self) -> usize {
        self.num_vars() - self.num_binaries()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(i, _)| VarId(i))
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.vars[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Fixes a variable to a single value by collapsing its bounds.
    pub fn fix(&mut self, id: VarId, value: f64) {
        let v = &mut self.vars[id.0];
        v.lower = value;
        v.upper = value;
    }

    /// Copy with every binary turned into a continuous `[lb, ub]` variable.
    pub fn relaxed(&self) -> LinearModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.kind = VarKind::Continuous;
        }
        m
    }

    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Checks ids, bounds and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(LpError::InvalidModel(format!("variable {} ({}) has NaN bound", i, v.name)));
            }
            if v.lower > v.upper {
                return Err(LpError::InvalidModel(format!(
                    "variable {} ({}) has lower {} > upper {}",
                    i, v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!("variable {} ({}) has an empty domain", i, v.name)));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(LpError::InvalidModel(format!(
                    "binary variable {} ({}) has bounds outside [0,1]",
                    i, v.name
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {} ({}) has non-finite rhs", r, row.name)));
            }
            for &(v, a) in &row.coeffs {
                if v.0 >= n {
                    return Err(LpError::InvalidModel(format!(
                        "row {} ({}) references unknown variable {}",
                        r, row.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "row {} ({}) has non-finite coefficient on {}",
                        r, row.name, self.vars[v.0].name
                    )));
                }
            }
        }
        for &(v, c) in &self.objective {
            if v.0 >= n {
                return Err(LpError::InvalidModel(format!("objective references unknown variable {}", v.0)));
            }
            if !c.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "objective coefficient on {} is not finite",
                    self.vars[v.0].name
                )));
            }
        }
        if !self.objective_constant.is_finite() {
            return Err(LpError::InvalidModel("objective constant is not finite".into()));
        }
        Ok(())
    }

    /// Largest scale-aware violation over bounds and rows.
    ///
    /// Row violations are divided by `max(1, |rhs|, max_j |a_j x_j|)` so that
    /// rows carrying large big-M terms are judged on a comparable footing.
    pub fn max_violation(&self, values: &[f64]) -> Violation {
        let mut worst = Violation::default();
        for (i, v) in self.vars.iter().enumerate() {
            let x = values[i];
            let viol = (v.lower - x).max(x - v.upper).max(0.0) / x.abs().max(1.0);
            if viol > worst.amount {
                worst = Violation { amount: viol, location: ViolationAt::Bound(VarId(i)) };
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            let viol = row.violation(values) / row.magnitude(values).max(1.0);
            if viol > worst.amount {
                worst = Violation { amount: viol, location: ViolationAt::Row(RowId(r)) };
            }
        }
        worst
    }

    /// True when every binary is within `tol` of 0 or 1.
    pub fn integral(&self, values: &[f64], tol: f64) -> bool {
        self.binaries().all(|b| {
            let x = values[b.0];
            (x - x.round()).abs() <= tol
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ViolationAt {
    #[default]
    None,
    Bound(VarId),
    Row(RowId),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Violation {
    pub amount: f64,
    pub location: ViolationAt,
}

impl Violation {
    pub fn within(&self, tol: f64) -> bool {
        self.amount <= tol
    }
}
