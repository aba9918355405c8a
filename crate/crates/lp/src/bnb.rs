use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{LpError, Result};
use crate::model::{LinearModel, ObjSense};
use crate::simplex::{Outcome, Simplex};
use crate::solution::{MilpSolution, Status};

const INT_TOL: f64 = 1e-6;
const ACCEPT_TOL: f64 = 1e-6;

/// Branch-and-bound controls.
#[derive(Debug, Clone)]
pub struct MilpConfig {
    /// Relative gap `(incumbent - bound) / max(1, |incumbent|)` at which search stops.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Optional starting point. Its binaries are rounded, fixed, and the
    /// remaining LP is solved to seed the incumbent.
    pub initial_solution: Option<Vec<f64>>,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self { gap_tol: 1e-4, time_limit: None, node_limit: None, initial_solution: None }
    }
}

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a LinearModel,
    spx: Simplex,
    binaries: Vec<usize>,
    current: Vec<(f64, f64)>,
    sign: f64,
    deadline: Option<Instant>,
    iterations: usize,
}

enum NodeResult {
    Solved { internal: f64, values: Vec<f64> },
    Infeasible,
    Unbounded,
    TimeLimit,
}

impl<'a> Search<'a> {
    fn apply(&mut self, fixings: &[(usize, f64)]) {
        let mut target: Vec<(f64, f64)> =
            self.binaries.iter().map(|&j| (self.model.vars[j].lower, self.model.vars[j].upper)).collect();
        for &(k, v) in fixings {
            target[k] = (v, v);
        }
        for (k, &(lo, up)) in target.iter().enumerate() {
            if self.current[k] != (lo, up) {
                self.spx.set_bounds(self.binaries[k], lo, up);
                self.current[k] = (lo, up);
            }
        }
    }

    fn solve(&mut self, fixings: &[(usize, f64)]) -> Result<NodeResult> {
        self.apply(fixings);
        self.spx.deadline = self.deadline;
        let before = self.spx.iterations;
        let mut outcome = self.spx.optimize();
        self.iterations += self.spx.iterations - before;
        // Warm-started verdicts of infeasibility or unboundedness are
        // re-checked from a fresh slack basis, which also resets tableau drift.
        if matches!(outcome, Outcome::IterationLimit | Outcome::Infeasible | Outcome::Unbounded) {
            let mut fresh = self.model.relaxed();
            for (k, &j) in self.binaries.iter().enumerate() {
                fresh.vars[j].lower = self.current[k].0;
                fresh.vars[j].upper = self.current[k].1;
            }
            self.spx = Simplex::new(&fresh);
            self.spx.deadline = self.deadline;
            outcome = self.spx.optimize();
            self.iterations += self.spx.iterations;
        }
        Ok(match outcome {
            Outcome::Optimal => {
                let values = self.spx.values();
                let internal = self.sign * self.model.evaluate_objective(&values);
                NodeResult::Solved { internal, values }
            }
            Outcome::Infeasible => NodeResult::Infeasible,
            Outcome::Unbounded => NodeResult::Unbounded,
            Outcome::TimeLimit => NodeResult::TimeLimit,
            Outcome::IterationLimit => {
                return Err(LpError::Numerical(format!("simplex stalled on `{}`", self.model.name)))
            }
        })
    }

    fn current_is_free(&self, k: usize) -> bool {
        let j = self.binaries[k];
        self.model.vars[j].lower < self.model.vars[j].upper
    }

    /// Fixes the binaries of `point` to their rounded values and solves the rest.
    fn polish(&mut self, point: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let fix: Vec<(usize, f64)> =
            self.binaries.iter().enumerate().map(|(k, &j)| (k, point[j].round().clamp(0.0, 1.0))).collect();
        match self.solve(&fix)? {
            NodeResult::Solved { mut values, .. } => {
                for &(k, v) in &fix {
                    values[self.binaries[k]] = v;
                }
                if self.model.max_violation(&values).within(ACCEPT_TOL) {
                    let internal = self.sign * self.model.evaluate_objective(&values);
                    Ok(Some((internal, values)))
                } else {
                    Ok(None)
                }
            }
            _ => Ok(None),
        }
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Best-first branch and bound over the binary variables of `model`.
///
/// Branches on the most fractional binary (lowest index on ties). Every node
/// reuses one tableau and is re-optimized by the dual simplex after its bounds
/// change. Hitting a time or node limit returns the incumbent, if any, with a
/// non-optimal status.
pub fn solve_milp(model: &LinearModel, cfg: &MilpConfig) -> Result<MilpSolution> {
    model.validate()?;
    if !(cfg.gap_tol >= 0.0) {
        return Err(LpError::InvalidArgument(format!("gap tolerance must be non-negative, got {}", cfg.gap_tol)));
    }
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + t);
    let sign = match model.sense {
        ObjSense::Minimize => 1.0,
        ObjSense::Maximize => -1.0,
    };
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let current = binaries.iter().map(|&j| (model.vars[j].lower, model.vars[j].upper)).collect();
    let mut search =
        Search { model, spx: Simplex::new(&model.relaxed()), binaries, current, sign, deadline, iterations: 0 };

    let mut incumbent = f64::INFINITY;
    let mut best_values: Vec<f64> = Vec::new();
    let mut nodes = 0usize;

    let finish = |status: Status, incumbent: f64, values: Vec<f64>, bound: f64, nodes: usize, iters: usize| {
        let mut s = MilpSolution::without_point(status, start.elapsed());
        s.nodes_explored = nodes;
        s.simplex_iterations = iters;
        if !values.is_empty() {
            s.objective = model.evaluate_objective(&values);
            s.values = values;
        }
        let bound = bound.min(incumbent);
        s.best_bound = sign * bound;
        s.relative_gap = relative_gap(incumbent, bound);
        s
    };

    let root = match search.solve(&[])? {
        NodeResult::Solved { internal, values } => (internal, values),
        NodeResult::Infeasible => {
            return Ok(finish(Status::Infeasible, incumbent, best_values, f64::INFINITY, 1, search.iterations))
        }
        NodeResult::Unbounded => {
            return Ok(finish(Status::Unbounded, incumbent, best_values, f64::NEG_INFINITY, 1, search.iterations))
        }
        NodeResult::TimeLimit => {
            return Ok(finish(Status::TimeLimit, incumbent, best_values, f64::NEG_INFINITY, 0, search.iterations))
        }
    };

    if let Some(start_point) = &cfg.initial_solution {
        if start_point.len() != model.num_vars() {
            return Err(LpError::InvalidArgument(format!(
                "initial solution has {} values, model has {} variables",
                start_point.len(),
                model.num_vars()
            )));
        }
        if let Some((obj, vals)) = search.polish(start_point)? {
            incumbent = obj;
            best_values = vals;
        }
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node { bound: root.0, depth: 0, id: next_id, fixings: Vec::new() });
    next_id += 1;
    let mut root_cache = Some(root);

    // After branching, the child on the rounding side is solved next so the
    // warm tableau only sees one bound change; the sibling waits in the heap.
    let mut plunge: Option<Node> = None;
    loop {
        let node = match plunge.take().or_else(|| heap.pop()) {
            Some(n) => n,
            None => break,
        };
        let prune_tol = 1e-9 * (1.0 + incumbent.abs());
        if node.bound >= incumbent - prune_tol {
            continue;
        }
        let global_bound = heap.peek().map_or(node.bound, |h| h.bound.min(node.bound));
        if relative_gap(incumbent, global_bound) <= cfg.gap_tol {
            return Ok(finish(Status::Optimal, incumbent, best_values, global_bound, nodes, search.iterations));
        }
        if deadline.is_some_and(|d| Instant::now() >= d) || cfg.node_limit.is_some_and(|l| nodes >= l) {
            let status =
                if deadline.is_some_and(|d| Instant::now() >= d) { Status::TimeLimit } else { Status::NodeLimit };
            return Ok(finish(status, incumbent, best_values, global_bound, nodes, search.iterations));
        }
        nodes += 1;
        let (obj, values) = match root_cache.take() {
            Some(r) if node.id == 0 => r,
            _ => match search.solve(&node.fixings)? {
                NodeResult::Solved { internal, values } => (internal, values),
                NodeResult::Infeasible | NodeResult::Unbounded => continue,
                NodeResult::TimeLimit => {
                    return Ok(finish(
                        Status::TimeLimit,
                        incumbent,
                        best_values,
                        global_bound,
                        nodes,
                        search.iterations,
                    ))
                }
            },
        };
        if obj >= incumbent - 1e-9 * (1.0 + incumbent.abs()) {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for (k, &j) in search.binaries.iter().enumerate() {
            let v = values[j];
            let frac = (v - v.round()).abs();
            if frac > INT_TOL {
                let score = 0.5 - (v - v.floor() - 0.5).abs();
                if branch.map_or(true, |(_, s)| score > s + 1e-12) {
                    branch = Some((k, score));
                }
            }
        }
        let split = match branch {
            Some((k, _)) => Some(k),
            None => {
                let candidate =
                    if search.binaries.is_empty() { Some((obj, values.clone())) } else { search.polish(&values)? };
                match candidate {
                    Some((cobj, cvals)) => {
                        if cobj < incumbent {
                            incumbent = cobj;
                            best_values = cvals;
                        }
                        None
                    }
                    // Near-integral values can hide behind large coefficients;
                    // keep splitting on the open binary farthest from its rounding.
                    None => {
                        let mut fixed = vec![false; search.binaries.len()];
                        node.fixings.iter().for_each(|&(k, _)| fixed[k] = true);
                        let dist = |k: usize| {
                            let v = values[search.binaries[k]];
                            (v - v.round()).abs()
                        };
                        (0..search.binaries.len())
                            .filter(|&k| !fixed[k] && search.current_is_free(k))
                            .max_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(b.cmp(&a)))
                    }
                }
            }
        };
        if let Some(k) = split {
            let preferred = if values[search.binaries[k]] >= 0.5 { 1.0 } else { 0.0 };
            for v in [1.0 - preferred, preferred] {
                let mut fixings = node.fixings.clone();
                fixings.push((k, v));
                let child = Node { bound: obj, depth: node.depth + 1, id: next_id, fixings };
                next_id += 1;
                if v == preferred {
                    plunge = Some(child);
                } else {
                    heap.push(child);
                }
            }
        }
    }

    let status = if best_values.is_empty() { Status::Infeasible } else { Status::Optimal };
    Ok(finish(status, incumbent, best_values, incumbent, nodes, search.iterations))
}
