//! The per-service follower LP, its dual, and the checks that tie them together.

use std::fmt;

use edgeprice_lp::{solve_lp, LinearModel, ObjSense, RowSense, Status, VarId};
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::model::{follower_cost, tol, DualSolution, FollowerSolution, Instance};

/// Prices and placement seen by one service.
#[derive(Debug, Clone)]
pub struct FollowerContext<'a> {
    pub inst: &'a Instance,
    pub k: usize,
    pub prices: Vec<f64>,
    pub placement: Vec<bool>,
}

impl<'a> FollowerContext<'a> {
    pub fn new(inst: &'a Instance, k: usize, prices: Vec<f64>, placement: Vec<bool>) -> Self {
        Self { inst, k, prices, placement }
    }

    fn t(&self, j: usize) -> f64 {
        if self.placement[j] {
            1.0
        } else {
            0.0
        }
    }

    fn a(&self, i: usize, j: usize) -> f64 {
        f64::from(self.inst.eligible[i][j][self.k])
    }
}

/// Constraint families of the follower problem, used for diagnosis and residual reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FollowerFamily {
    DemandBalance,
    EdgeCover,
    CloudCover,
    EdgeCapacity,
    Eligibility,
    Budget,
    DelayDefinition,
    DelayCap,
}

impl fmt::Display for FollowerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::DemandBalance => "demand balance",
            Self::EdgeCover => "edge procurement covers allocation",
            Self::CloudCover => "cloud procurement covers allocation",
            Self::EdgeCapacity => "edge capacity",
            Self::Eligibility => "eligibility cap",
            Self::Budget => "budget",
            Self::DelayDefinition => "average-delay definition",
            Self::DelayCap => "delay cap",
        };
        f.write_str(s)
    }
}

/// Variable ids of a built follower LP.
#[derive(Debug, Clone)]
pub struct FollowerLayout {
    pub x_cloud: Vec<VarId>,
    pub x_edge: Vec<Vec<VarId>>,
    pub y_cloud: VarId,
    pub y_edge: Vec<VarId>,
    pub avg_delay: Vec<VarId>,
    /// Family of each row, index-aligned with the model rows.
    pub row_family: Vec<FollowerFamily>,
}

impl FollowerLayout {
    pub fn read(&self, values: &[f64]) -> FollowerSolution {
        FollowerSolution {
            x_cloud: self.x_cloud.iter().map(|v| values[v.0]).collect(),
            x_edge: self.x_edge.iter().map(|r| r.iter().map(|v| values[v.0]).collect()).collect(),
            y_cloud: values[self.y_cloud.0],
            y_edge: self.y_edge.iter().map(|v| values[v.0]).collect(),
            avg_delay: self.avg_delay.iter().map(|v| values[v.0]).collect(),
            cost: 0.0,
        }
    }
}

/// Adds the follower variables and primal rows for `ctx` to `lp` under `tag`.
/// Returns the layout; the objective is left to the caller.
pub(crate) fn add_follower_primal(lp: &mut LinearModel, ctx: &FollowerContext, tag: &str) -> FollowerLayout {
    let inst = ctx.inst;
    let (m, n, k) = (inst.m, inst.n, ctx.k);
    let x_cloud: Vec<VarId> = (0..m).map(|i| lp.add_nonneg(format!("x0[{i}]{tag}"))).collect();
    let x_edge: Vec<Vec<VarId>> =
        (0..m).map(|i| (0..n).map(|j| lp.add_nonneg(format!("x[{i}][{j}]{tag}"))).collect()).collect();
    let y_cloud = lp.add_nonneg(format!("y0{tag}"));
    let y_edge: Vec<VarId> = (0..n).map(|j| lp.add_nonneg(format!("y[{j}]{tag}"))).collect();
    let avg_delay: Vec<VarId> =
        (0..m).map(|i| lp.add_continuous(format!("da[{i}]{tag}"), 0.0, inst.delay_cap[k])).collect();

    let mut fam = Vec::new();
    let start = lp.num_rows();
    for i in 0..m {
        let mut c = vec![(x_cloud[i], 1.0)];
        c.extend((0..n).map(|j| (x_edge[i][j], 1.0)));
        lp.add_row(format!("bal[{i}]{tag}"), c, RowSense::Eq, inst.demand[i][k]);
        fam.push(FollowerFamily::DemandBalance);
    }
    for j in 0..n {
        let mut c: Vec<_> = (0..m).map(|i| (x_edge[i][j], 1.0)).collect();
        c.push((y_edge[j], -1.0));
        lp.add_row(format!("ecov[{j}]{tag}"), c, RowSense::Le, 0.0);
        fam.push(FollowerFamily::EdgeCover);
    }
    let mut c: Vec<_> = (0..m).map(|i| (x_cloud[i], 1.0)).collect();
    c.push((y_cloud, -1.0));
    lp.add_row(format!("ccov{tag}"), c, RowSense::Le, 0.0);
    fam.push(FollowerFamily::CloudCover);
    for j in 0..n {
        lp.add_row(format!("ecap[{j}]{tag}"), [(y_edge[j], 1.0)], RowSense::Le, inst.compute_cap[j] * ctx.t(j));
        fam.push(FollowerFamily::EdgeCapacity);
    }
    for i in 0..m {
        for j in 0..n {
            lp.add_row(
                format!("elig[{i}][{j}]{tag}"),
                [(x_edge[i][j], 1.0)],
                RowSense::Le,
                ctx.a(i, j) * inst.demand[i][k],
            );
            fam.push(FollowerFamily::Eligibility);
        }
    }
    let mut c = vec![(y_cloud, inst.cloud_price)];
    c.extend((0..n).map(|j| (y_edge[j], ctx.prices[j])));
    lp.add_row(format!("budget{tag}"), c, RowSense::Le, inst.budget[k]);
    fam.push(FollowerFamily::Budget);
    for i in 0..m {
        let mut c = vec![(x_cloud[i], inst.delay_cloud[i])];
        c.extend((0..n).map(|j| (x_edge[i][j], inst.delay_edge[i][j])));
        c.push((avg_delay[i], -inst.demand[i][k]));
        lp.add_row(format!("delay[{i}]{tag}"), c, RowSense::Eq, 0.0);
        fam.push(FollowerFamily::DelayDefinition);
    }
    debug_assert_eq!(lp.num_rows() - start, fam.len());
    FollowerLayout { x_cloud, x_edge, y_cloud, y_edge, avg_delay, row_family: fam }
}

/// Objective coefficients of the follower cost for the layout's variables.
pub(crate) fn follower_objective(ctx: &FollowerContext, lay: &FollowerLayout) -> Vec<(VarId, f64)> {
    let inst = ctx.inst;
    let w = inst.delay_weight[ctx.k];
    let mut obj = vec![(lay.y_cloud, inst.cloud_price)];
    obj.extend((0..inst.n).map(|j| (lay.y_edge[j], ctx.prices[j])));
    for i in 0..inst.m {
        obj.push((lay.x_cloud[i], w * inst.delay_cloud[i]));
        for j in 0..inst.n {
            obj.push((lay.x_edge[i][j], w * inst.delay_edge[i][j]));
        }
    }
    obj
}

/// The follower cost-minimization LP.
pub fn build_follower_lp(ctx: &FollowerContext) -> (LinearModel, FollowerLayout) {
    let mut lp = LinearModel::new(format!("follower{}", ctx.k), ObjSense::Minimize);
    let lay = add_follower_primal(&mut lp, ctx, "");
    let obj = follower_objective(ctx, &lay);
    lp.set_objective(obj, 0.0);
    (lp, lay)
}

/// Variable ids of the follower dual LP.
#[derive(Debug, Clone)]
pub struct DualLayout {
    pub xi: Vec<VarId>,
    pub sigma: Vec<VarId>,
    pub tau: Vec<VarId>,
    pub mu1: VarId,
    pub mu2: VarId,
    pub lambda: Vec<VarId>,
    pub gamma: Vec<VarId>,
    pub eta: Vec<Vec<VarId>>,
    pub zeta: Vec<VarId>,
    pub eps: Vec<Vec<VarId>>,
}

impl DualLayout {
    pub(crate) fn add_vars(lp: &mut LinearModel, m: usize, n: usize, tag: &str) -> Self {
        let per_i =
            |lp: &mut LinearModel, s: &str, free: bool| -> Vec<VarId> {
                (0..m)
                    .map(|i| {
                        if free {
                            lp.add_free(format!("{s}[{i}]{tag}"))
                        } else {
                            lp.add_nonneg(format!("{s}[{i}]{tag}"))
                        }
                    })
                    .collect()
            };
        let xi = per_i(lp, "xi", true);
        let sigma = per_i(lp, "sigma", true);
        let tau = per_i(lp, "tau", false);
        let mu1 = lp.add_nonneg(format!("mu1{tag}"));
        let mu2 = lp.add_nonneg(format!("mu2{tag}"));
        let lambda = (0..n).map(|j| lp.add_nonneg(format!("lambda[{j}]{tag}"))).collect();
        let gamma = (0..n).map(|j| lp.add_nonneg(format!("Gamma[{j}]{tag}"))).collect();
        let eta = (0..m).map(|i| (0..n).map(|j| lp.add_nonneg(format!("eta[{i}][{j}]{tag}"))).collect()).collect();
        let zeta = per_i(lp, "zeta", false);
        let eps = (0..m).map(|i| (0..n).map(|j| lp.add_nonneg(format!("eps[{i}][{j}]{tag}"))).collect()).collect();
        Self { xi, sigma, tau, mu1, mu2, lambda, gamma, eta, zeta, eps }
    }

    /// Reads multipliers; `sigma_sign` converts from the storage convention.
    pub fn read(&self, values: &[f64], sigma_sign: f64) -> DualSolution {
        let g = |v: &VarId| values[v.0];
        DualSolution {
            xi: self.xi.iter().map(g).collect(),
            sigma: self.sigma.iter().map(|v| sigma_sign * values[v.0]).collect(),
            tau: self.tau.iter().map(g).collect(),
            mu1: g(&self.mu1),
            mu2: g(&self.mu2),
            lambda: self.lambda.iter().map(g).collect(),
            gamma: self.gamma.iter().map(g).collect(),
            eta: self.eta.iter().map(|r| r.iter().map(g).collect()).collect(),
            zeta: self.zeta.iter().map(g).collect(),
            eps: self.eps.iter().map(|r| r.iter().map(g).collect()).collect(),
        }
    }

    /// Dual rows that do not involve the price: cloud, delay and allocation columns.
    pub(crate) fn add_price_free_rows(&self, lp: &mut LinearModel, inst: &Instance, k: usize, tag: &str) {
        let w = inst.delay_weight[k];
        let p0 = inst.cloud_price;
        lp.add_row(format!("dy0{tag}"), [(self.mu1, 1.0), (self.mu2, -p0)], RowSense::Le, p0);
        for i in 0..inst.m {
            let r = inst.demand[i][k];
            lp.add_row(format!("dda[{i}]{tag}"), [(self.sigma[i], -r), (self.tau[i], -1.0)], RowSense::Le, 0.0);
        }
        for i in 0..inst.m {
            for j in 0..inst.n {
                let d = inst.delay_edge[i][j];
                lp.add_row(
                    format!("dx[{i}][{j}]{tag}"),
                    [
                        (self.xi[i], 1.0),
                        (self.sigma[i], d),
                        (self.lambda[j], -1.0),
                        (self.eta[i][j], -1.0),
                        (self.eps[i][j], 1.0),
                    ],
                    RowSense::Le,
                    w * d,
                );
            }
        }
        for i in 0..inst.m {
            let d0 = inst.delay_cloud[i];
            lp.add_row(
                format!("dx0[{i}]{tag}"),
                [(self.xi[i], 1.0), (self.sigma[i], d0), (self.mu1, -1.0), (self.zeta[i], 1.0)],
                RowSense::Le,
                w * d0,
            );
        }
    }
}

/// The follower dual LP, in maximization form.
pub fn build_follower_dual(ctx: &FollowerContext) -> (LinearModel, DualLayout) {
    let inst = ctx.inst;
    let k = ctx.k;
    let mut lp = LinearModel::new(format!("follower{k}_dual"), ObjSense::Maximize);
    let lay = DualLayout::add_vars(&mut lp, inst.m, inst.n, "");
    for j in 0..inst.n {
        let p = ctx.prices[j];
        lp.add_row(format!("dy[{j}]"), [(lay.lambda[j], 1.0), (lay.gamma[j], -1.0), (lay.mu2, -p)], RowSense::Le, p);
    }
    lay.add_price_free_rows(&mut lp, inst, k, "");
    let mut obj = Vec::new();
    for i in 0..inst.m {
        let r = inst.demand[i][k];
        obj.push((lay.xi[i], r));
        obj.push((lay.tau[i], -inst.delay_cap[k]));
        for j in 0..inst.n {
            obj.push((lay.eta[i][j], -r * ctx.a(i, j)));
        }
    }
    obj.push((lay.mu2, -inst.budget[k]));
    for j in 0..inst.n {
        obj.push((lay.gamma[j], -inst.compute_cap[j] * ctx.t(j)));
    }
    lp.set_objective(obj, 0.0);
    (lp, lay)
}

/// Dual objective value of `ds` for the context's data.
pub fn dual_objective(ctx: &FollowerContext, ds: &DualSolution) -> f64 {
    let inst = ctx.inst;
    let k = ctx.k;
    let mut v = -inst.budget[k] * ds.mu2;
    for i in 0..inst.m {
        let r = inst.demand[i][k];
        v += r * ds.xi[i] - inst.delay_cap[k] * ds.tau[i];
        for j in 0..inst.n {
            v -= r * ctx.a(i, j) * ds.eta[i][j];
        }
    }
    for j in 0..inst.n {
        v -= inst.compute_cap[j] * ctx.t(j) * ds.gamma[j];
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongDualityReport {
    pub primal: f64,
    pub dual: f64,
    pub residual: f64,
    pub passed: bool,
}

/// Compares the follower cost against the dual objective.
pub fn check_strong_duality(fs: &FollowerSolution, ds: &DualSolution, ctx: &FollowerContext) -> StrongDualityReport {
    let primal = follower_cost(ctx.inst, &ctx.prices, ctx.k, fs).unwrap_or(f64::NAN);
    let dual = dual_objective(ctx, ds);
    let residual = (primal - dual).abs();
    StrongDualityReport { primal, dual, residual, passed: residual <= 1e-6 * (1.0 + primal.abs()) }
}

/// Largest |multiplier × slack| in each complementarity family, in the order
/// delay cap, cloud cover, edge cover, edge capacity, eligibility, budget,
/// cloud allocation sign, edge allocation sign.
pub fn complementarity_residuals(ctx: &FollowerContext, fs: &FollowerSolution, ds: &DualSolution) -> [f64; 8] {
    let inst = ctx.inst;
    let k = ctx.k;
    let mut r = [0.0f64; 8];
    let mut put = |f: usize, v: f64| r[f] = r[f].max(v.abs());
    for i in 0..inst.m {
        put(0, ds.tau[i] * (inst.delay_cap[k] - fs.avg_delay[i]));
        put(6, ds.zeta[i] * fs.x_cloud[i]);
        for j in 0..inst.n {
            put(4, ds.eta[i][j] * (ctx.a(i, j) * inst.demand[i][k] - fs.x_edge[i][j]));
            put(7, ds.eps[i][j] * fs.x_edge[i][j]);
        }
    }
    put(1, ds.mu1 * (fs.y_cloud - fs.x_cloud.iter().sum::<f64>()));
    for j in 0..inst.n {
        let routed: f64 = (0..inst.m).map(|i| fs.x_edge[i][j]).sum();
        put(2, ds.lambda[j] * (fs.y_edge[j] - routed));
        put(3, ds.gamma[j] * (inst.compute_cap[j] * ctx.t(j) - fs.y_edge[j]));
    }
    let spend = inst.cloud_price * fs.y_cloud + (0..inst.n).map(|j| ctx.prices[j] * fs.y_edge[j]).sum::<f64>();
    put(5, ds.mu2 * (inst.budget[k] - spend));
    r
}

pub const COMPLEMENTARITY_FAMILIES: [&str; 8] = [
    "delay cap",
    "cloud cover",
    "edge cover",
    "edge capacity",
    "eligibility",
    "budget",
    "cloud allocation sign",
    "edge allocation sign",
];

/// Result of solving one follower problem.
#[derive(Debug, Clone)]
pub enum FollowerOutcome {
    Solved { primal: FollowerSolution, dual: DualSolution },
    Infeasible { family: FollowerFamily, violation: f64 },
}

impl FollowerOutcome {
    pub fn solved(self) -> Result<(FollowerSolution, DualSolution)> {
        match self {
            FollowerOutcome::Solved { primal, dual } => Ok((primal, dual)),
            FollowerOutcome::Infeasible { family, violation } => {
                Err(CoreError::Infeasible(format!("follower problem violates the {family} family by {violation:.3e}")))
            }
        }
    }
}

/// Minimum follower cost, or `None` when infeasible.
pub fn follower_optimum(ctx: &FollowerContext) -> Result<Option<(f64, FollowerSolution)>> {
    let (lp, lay) = build_follower_lp(ctx);
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {
            let mut fs = lay.read(&sol.values);
            fs.cost = follower_cost(ctx.inst, &ctx.prices, ctx.k, &fs)?;
            Ok(Some((sol.objective, fs)))
        }
        Status::Infeasible => Ok(None),
        s => Err(CoreError::NoSolution(s)),
    }
}

/// Solves the follower LP and its dual separately and returns both points.
///
/// An infeasible follower is attributed to a constraint family. The delay cap
/// is blamed when dropping it restores feasibility, the budget likewise;
/// otherwise the family with the largest residual at the phase-one point wins.
pub fn solve_follower(ctx: &FollowerContext) -> Result<FollowerOutcome> {
    let (lp, lay) = build_follower_lp(ctx);
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return diagnose(ctx, &lp, &lay, &sol.values),
        s => return Err(CoreError::NoSolution(s)),
    }
    let mut primal = lay.read(&sol.values);
    primal.cost = follower_cost(ctx.inst, &ctx.prices, ctx.k, &primal)?;

    let (dlp, dlay) = build_follower_dual(ctx);
    let dsol = solve_lp(&dlp)?;
    if dsol.status != Status::Optimal {
        return Err(CoreError::NumericalIntegrity(format!(
            "follower {} dual LP returned `{}` while the primal is optimal",
            ctx.k, dsol.status
        )));
    }
    let dual = dlay.read(&dsol.values, 1.0);
    let gap = (primal.cost - dsol.objective).abs();
    if gap > tol::STRONG_DUALITY * (1.0 + primal.cost.abs()).max(1.0) * 10.0 {
        return Err(CoreError::NumericalIntegrity(format!(
            "follower {} primal {} and dual {} objectives disagree",
            ctx.k, primal.cost, dsol.objective
        )));
    }
    Ok(FollowerOutcome::Solved { primal, dual })
}

fn diagnose(ctx: &FollowerContext, lp: &LinearModel, lay: &FollowerLayout, point: &[f64]) -> Result<FollowerOutcome> {
    let mut relaxed = lp.clone();
    for v in &lay.avg_delay {
        relaxed.var_mut(*v).upper = f64::INFINITY;
    }
    if solve_lp(&relaxed)?.status == Status::Optimal {
        let worst = worst_delay_excess(ctx, lay, &relaxed)?;
        return Ok(FollowerOutcome::Infeasible { family: FollowerFamily::DelayCap, violation: worst });
    }
    let budget_row = lay.row_family.iter().position(|f| *f == FollowerFamily::Budget).expect("budget row");
    let mut relaxed = lp.clone();
    relaxed.rows[budget_row].rhs = f64::MAX / 4.0;
    if solve_lp(&relaxed)?.status == Status::Optimal {
        let excess = lp.rows[budget_row].violation(point);
        return Ok(FollowerOutcome::Infeasible { family: FollowerFamily::Budget, violation: excess });
    }
    let mut best = (FollowerFamily::DemandBalance, 0.0);
    for (r, row) in lp.rows.iter().enumerate() {
        let v = row.violation(point);
        if v > best.1 {
            let mut fam = lay.row_family[r];
            if fam == FollowerFamily::DelayDefinition {
                let i = r - lay.row_family.iter().position(|f| *f == FollowerFamily::DelayDefinition).unwrap();
                if point[lay.avg_delay[i].0] >= ctx.inst.delay_cap[ctx.k] - tol::FEAS {
                    fam = FollowerFamily::DelayCap;
                }
            }
            best = (fam, v);
        }
    }
    Ok(FollowerOutcome::Infeasible { family: best.0, violation: best.1 })
}

/// Minimum achievable worst-AP delay excess over the cap, for reporting.
fn worst_delay_excess(ctx: &FollowerContext, lay: &FollowerLayout, relaxed: &LinearModel) -> Result<f64> {
    let mut lp = relaxed.clone();
    let cap = ctx.inst.delay_cap[ctx.k];
    let e = lp.add_nonneg("excess");
    for v in &lay.avg_delay {
        lp.add_row("excess_def", [(*v, 1.0), (e, -1.0)], RowSense::Le, cap);
    }
    lp.sense = ObjSense::Minimize;
    lp.set_objective([(e, 1.0)], 0.0);
    let s = solve_lp(&lp)?;
    Ok(if s.status == Status::Optimal { s.objective } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::small;

    #[test]
    fn one_by_one_model_has_five_vars_and_seven_rows() {
        let inst = small(1, 1, 1, 2);
        let ctx = FollowerContext::new(&inst, 0, vec![0.02], vec![true]);
        let (lp, _) = build_follower_lp(&ctx);
        assert_eq!((lp.num_vars(), lp.num_rows()), (5, 7));
    }

    #[test]
    fn no_placement_routes_everything_to_cloud() {
        let inst = small(3, 2, 1, 2);
        let ctx = FollowerContext::new(&inst, 0, vec![0.01, 0.01], vec![false, false]);
        let (fs, _) = solve_follower(&ctx).unwrap().solved().unwrap();
        for i in 0..3 {
            assert!((fs.x_cloud[i] - inst.demand[i][0]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_demand_costs_zero() {
        let mut inst = small(2, 2, 1, 2);
        inst.demand = vec![vec![0.0]; 2];
        let ctx = FollowerContext::new(&inst, 0, vec![0.02, 0.03], vec![true, true]);
        let (fs, ds) = solve_follower(&ctx).unwrap().solved().unwrap();
        assert!(fs.cost.abs() < 1e-12);
        assert!(fs.x_edge.iter().flatten().chain(&fs.x_cloud).all(|v| v.abs() < 1e-12));
        assert!(check_strong_duality(&fs, &ds, &ctx).residual < 1e-12);
    }

    #[test]
    fn cheap_node_takes_all_work_without_delay_weight() {
        let mut inst = small(2, 1, 1, 2);
        inst.delay_weight[0] = 0.0;
        inst.cloud_price = 0.03;
        let ctx = FollowerContext::new(&inst, 0, vec![0.01], vec![true]);
        let (fs, _) = solve_follower(&ctx).unwrap().solved().unwrap();
        assert!((fs.y_edge[0] - inst.total_demand(0)).abs() < 1e-9);
    }

    #[test]
    fn zero_delay_cap_is_infeasible_and_named() {
        let mut inst = small(2, 1, 1, 2);
        inst.delay_cap[0] = 1e-9;
        let ctx = FollowerContext::new(&inst, 0, vec![0.01], vec![true]);
        match solve_follower(&ctx).unwrap() {
            FollowerOutcome::Infeasible { family, .. } => assert_eq!(family, FollowerFamily::DelayCap),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_dual_point_scores_zero() {
        let inst = small(2, 2, 1, 2);
        let ctx = FollowerContext::new(&inst, 0, vec![0.02, 0.03], vec![true, false]);
        let (dlp, _) = build_follower_dual(&ctx);
        let zero = vec![0.0; dlp.num_vars()];
        assert!(dlp.max_violation(&zero).within(0.0));
        assert_eq!(dlp.evaluate_objective(&zero), 0.0);
    }

    #[test]
    fn perturbed_dual_fails_the_check() {
        let inst = small(2, 2, 1, 2);
        let ctx = FollowerContext::new(&inst, 0, vec![0.02, 0.03], vec![true, true]);
        let (fs, mut ds) = solve_follower(&ctx).unwrap().solved().unwrap();
        assert!(check_strong_duality(&fs, &ds, &ctx).passed);
        ds.mu2 += 1.0;
        assert!(!check_strong_duality(&fs, &ds, &ctx).passed);
    }
}
