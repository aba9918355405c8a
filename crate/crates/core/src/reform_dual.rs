//! Duality-based single-level model: primal feasibility, dual feasibility and
//! a primal-equals-dual identity per service, with price products linearized.

use edgeprice_lp::{LinearModel, MilpConfig, MilpSolution, RowSense};
use serde::Serialize;

use crate::error::Result;
use crate::follower::{follower_optimum, DualLayout, FollowerContext};
use crate::model::{follower_cost, tol, FollowerSolution, Instance, LeaderDecision};
use crate::reform_kkt::{derive_bigm, BigMSet};
use crate::single_level::{
    extract, solve_escalating, tag, Builder, Extracted, MilpRunner, SingleLevelLayout, ValidatedSolve,
};

pub type P2Layout = SingleLevelLayout;

/// Builds the duality-based model with big-M values from [`derive_bigm`].
pub fn build_p2(inst: &Instance) -> (LinearModel, P2Layout) {
    build_p2_with(inst, &derive_bigm(inst))
}

/// Builds the duality-based model using `bigm.lin` for the product linearizations.
pub fn build_p2_with(inst: &Instance, bigm: &BigMSet) -> (LinearModel, P2Layout) {
    let mut b = Builder::new(inst, "P2", 1.0);
    b.leader_rows();
    for k in 0..inst.k {
        let tg = tag(k);
        b.follower_block(k);
        let dl = DualLayout::add_vars(&mut b.lp, inst.m, inst.n, &tg);
        b.products(k, &dl, bigm.lin);
        for j in 0..inst.n {
            let mut c = vec![(dl.lambda[j], 1.0), (dl.gamma[j], -1.0)];
            for l in 0..inst.v {
                let p = inst.price_grid[j][l];
                c.push((b.lay.r[j][l], -p));
                c.push((b.lay.pi[k][j][l], -p));
            }
            b.lp.add_row(format!("dy[{j}]{tg}"), c, RowSense::Le, 0.0);
        }
        dl.add_price_free_rows(&mut b.lp, inst, k, &tg);
        b.revenue_rows(k, &dl);
        b.lay.duals.push(dl);
    }
    b.capacity_rows();
    b.objective();
    (b.lp, b.lay)
}

/// Solves the duality-based model after applying `restrict`, escalating the
/// product linearization constant until validation comes back clean.
pub fn solve_p2_validated(
    inst: &Instance,
    cfg: &MilpConfig,
    restrict: &dyn Fn(&mut LinearModel, &SingleLevelLayout) -> Result<()>,
) -> Result<ValidatedSolve> {
    solve_p2_validated_with(inst, &|m| Ok(edgeprice_lp::solve_milp(m, cfg)?), restrict)
}

/// As [`solve_p2_validated`], with the MILP step delegated to `run`.
pub fn solve_p2_validated_with(
    inst: &Instance,
    run: MilpRunner<'_>,
    restrict: &dyn Fn(&mut LinearModel, &SingleLevelLayout) -> Result<()>,
) -> Result<ValidatedSolve> {
    solve_escalating(inst, run, false, |bigm| {
        let (mut lp, lay) = build_p2_with(inst, bigm);
        restrict(&mut lp, &lay)?;
        Ok((lp, lay))
    })
}

/// Recovers decisions, allocations and multipliers; recomputes the profit.
pub fn extract_solution_p2(
    inst: &Instance,
    model: &LinearModel,
    lay: &P2Layout,
    sol: &MilpSolution,
) -> Result<Extracted> {
    extract(inst, model, lay, sol)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FollowerCheck {
    pub k: usize,
    pub claimed_cost: f64,
    /// `None` when the follower LP is infeasible at the given decision.
    pub optimal_cost: Option<f64>,
    pub difference: f64,
    pub feasible: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BilevelReport {
    pub followers: Vec<FollowerCheck>,
    pub passed: bool,
}

/// Re-solves every follower at the leader's prices and placement and checks
/// that the claimed allocation is feasible and cost-optimal.
pub fn verify_bilevel_optimality(
    inst: &Instance,
    ld: &LeaderDecision,
    fs: &[FollowerSolution],
) -> Result<BilevelReport> {
    let mut checks = Vec::with_capacity(inst.k);
    for (k, f) in fs.iter().enumerate().take(inst.k) {
        let ctx = FollowerContext::new(inst, k, ld.price.clone(), ld.placement_column(k));
        let claimed = follower_cost(inst, &ld.price, k, f)?;
        let (lp, _) = crate::follower::build_follower_lp(&ctx);
        let feasible = lp.max_violation(&flatten(f)).within(1e-6);
        let optimum = follower_optimum(&ctx)?.map(|(c, _)| c);
        let difference = match optimum {
            Some(o) => (claimed - o).abs() / (1.0 + o.abs()),
            None => f64::INFINITY,
        };
        checks.push(FollowerCheck {
            k,
            claimed_cost: claimed,
            optimal_cost: optimum,
            difference,
            feasible,
            passed: feasible && difference <= tol::AGREEMENT,
        });
    }
    let passed = checks.len() == inst.k && checks.iter().all(|c| c.passed);
    Ok(BilevelReport { followers: checks, passed })
}

/// Follower point in the variable order of `build_follower_lp`.
fn flatten(f: &FollowerSolution) -> Vec<f64> {
    let mut v = f.x_cloud.clone();
    v.extend(f.x_edge.iter().flatten());
    v.push(f.y_cloud);
    v.extend(&f.y_edge);
    v.extend(&f.avg_delay);
    v
}

/// Variable and constraint counts given by the published size formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PublishedCounts {
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
}

pub fn published_counts_p2(m: usize, n: usize, k: usize, v: usize) -> PublishedCounts {
    PublishedCounts {
        binaries: n * (k + v + 1),
        continuous: k * (3 + 2 * m * (n + 1) + 2 * n * (v + 2)),
        constraints: 2 * (2 * n + 3 * k) + 4 * n * k * (m + 2 * v) + k * (7 * m + 11 * n),
    }
}

pub fn published_counts_p1(m: usize, n: usize, k: usize, v: usize) -> PublishedCounts {
    PublishedCounts {
        binaries: n * (k + v + 1) + 2 * k * (m + 1) * (n + 1),
        continuous: k * (3 * (m * n + m + 1) + 2 * n * (v + 2)),
        constraints: 1 + 4 * n + 9 * k + 2 * n * k * (4 * v + 7) + 3 * m * k * (3 * n + 4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::small;
    use crate::single_level::count_kinds;
    use edgeprice_lp::{solve_milp, Status};

    #[test]
    fn binary_count_matches_formula() {
        let inst = small(3, 2, 2, 3);
        let (lp, _) = build_p2(&inst);
        assert_eq!(count_kinds(&lp).0, 2 * (2 + 3 + 1));
    }

    #[test]
    fn published_formula_values_for_the_base_case() {
        let c = published_counts_p2(10, 4, 6, 5);
        assert_eq!((c.binaries, c.continuous), (48, 954));
        assert_eq!(published_counts_p1(10, 4, 6, 5).binaries, 708);
    }

    #[test]
    fn tiny_instance_extracts_consistently() {
        let inst = small(2, 1, 1, 2);
        let (lp, lay) = build_p2(&inst);
        let sol = solve_milp(&lp, &MilpConfig { gap_tol: 1e-9, ..Default::default() }).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let ex = extract_solution_p2(&inst, &lp, &lay, &sol).unwrap();
        for k in 0..inst.k {
            let direct: f64 = (0..inst.n).map(|j| ex.decision.price[j] * ex.followers[k].y_edge[j]).sum();
            assert!((ex.revenue[k] - direct).abs() < 1e-6);
        }
        assert!(verify_bilevel_optimality(&inst, &ex.decision, &ex.followers).unwrap().passed);
    }

    #[test]
    fn infeasible_status_is_refused() {
        let inst = small(1, 1, 1, 2);
        let (lp, lay) = build_p2(&inst);
        let sol = edgeprice_lp::MilpSolution {
            status: Status::Infeasible,
            objective: f64::NAN,
            values: vec![],
            best_bound: f64::NAN,
            relative_gap: f64::INFINITY,
            nodes_explored: 0,
            simplex_iterations: 0,
            wall_time: Default::default(),
        };
        assert!(matches!(extract_solution_p2(&inst, &lp, &lay, &sol), Err(crate::CoreError::NoSolution(_))));
    }

    #[test]
    fn no_services_is_a_vacuous_pass() {
        let inst = small(2, 2, 0, 2);
        let ld = LeaderDecision::idle(&inst);
        assert!(verify_bilevel_optimality(&inst, &ld, &[]).unwrap().passed);
    }
}
