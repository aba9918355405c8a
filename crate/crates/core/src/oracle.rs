//! Exhaustive ground truth for tiny instances: every leader decision is
//! enumerated, every follower LP is solved, and ties among follower optima
//! are broken in the leader's favour by a joint second-stage LP.

use std::collections::HashMap;

use edgeprice_lp::{solve_lp, LinearModel, ObjSense, RowSense, Status};
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::follower::{add_follower_primal, follower_objective, follower_optimum, FollowerContext};
use crate::model::{
    ensure_valid, follower_cost, leader_profit, tol, FollowerSolution, Instance, LeaderChoice, LeaderDecision,
};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_candidates: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_candidates: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum CandidateOutcome {
    Feasible { profit: f64 },
    Infeasible { reason: String },
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateRecord {
    pub choice: LeaderChoice,
    pub outcome: CandidateOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleResult {
    pub best_profit: f64,
    pub best_decision: LeaderDecision,
    #[serde(skip)]
    pub followers: Vec<FollowerSolution>,
    pub log: Vec<CandidateRecord>,
    pub candidates_examined: usize,
}

/// Number of raw leader candidates, `V^N · 2^N · 2^(N·K)`, or `None` on overflow.
pub fn candidate_count(inst: &Instance) -> Option<u128> {
    let n = u32::try_from(inst.n).ok()?;
    let nk = u32::try_from(inst.n.checked_mul(inst.k)?).ok()?;
    (inst.v as u128).checked_pow(n)?.checked_mul(2u128.checked_pow(n)?)?.checked_mul(2u128.checked_pow(nk)?)
}

fn all_choices(inst: &Instance) -> Vec<LeaderChoice> {
    let (n, k, v) = (inst.n, inst.k, inst.v);
    let mut levels: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        levels = levels.into_iter().flat_map(|p| (0..v).map(move |l| [p.clone(), vec![l]].concat())).collect();
    }
    let mut out = Vec::new();
    for pl in &levels {
        for zmask in 0u64..(1 << n) {
            let active: Vec<bool> = (0..n).map(|j| zmask >> j & 1 == 1).collect();
            for tmask in 0u64..(1 << (n * k)) {
                let placed = (0..n).map(|j| (0..k).map(|kk| tmask >> (j * k + kk) & 1 == 1).collect()).collect();
                out.push(LeaderChoice { price_level: pl.clone(), active: active.clone(), placed });
            }
        }
    }
    out.sort();
    out
}

type FollowerKey = (usize, Vec<usize>, Vec<bool>);

/// Optimal follower costs for every (service, price levels, placement column).
fn follower_table(
    inst: &Instance,
    choices: &[LeaderChoice],
    exec: Execution,
) -> Result<HashMap<FollowerKey, Option<f64>>> {
    let mut keys: Vec<FollowerKey> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in choices {
        for k in 0..inst.k {
            let key = (k, c.price_level.clone(), c.placed.iter().map(|row| row[k]).collect::<Vec<bool>>());
            if seen.insert(key.clone()) {
                keys.push(key);
            }
        }
    }
    let solved = par::map(&keys, exec, |(k, levels, column)| {
        let prices = levels.iter().enumerate().map(|(j, &l)| inst.price_grid[j][l]).collect();
        let ctx = FollowerContext::new(inst, *k, prices, column.clone());
        follower_optimum(&ctx).map(|o| o.map(|(c, _)| c))
    });
    let mut table = HashMap::with_capacity(keys.len());
    for (key, res) in keys.into_iter().zip(solved) {
        table.insert(key, res?);
    }
    Ok(table)
}

/// Leader-favourable follower responses at a fixed decision, given each
/// follower's optimal cost.
fn optimistic_responses(inst: &Instance, ld: &LeaderDecision, optima: &[f64]) -> Result<Option<Vec<FollowerSolution>>> {
    match optimistic_lp(inst, ld, optima, 0.0)? {
        None => optimistic_lp(inst, ld, optima, 1e-9),
        found => Ok(found),
    }
}

/// Second-stage LP with each follower's cost held within `slack` (relative)
/// of its optimum.
fn optimistic_lp(
    inst: &Instance,
    ld: &LeaderDecision,
    optima: &[f64],
    slack: f64,
) -> Result<Option<Vec<FollowerSolution>>> {
    let mut lp = LinearModel::new("second-stage", ObjSense::Maximize);
    let mut layouts = Vec::with_capacity(inst.k);
    let mut obj = Vec::new();
    for k in 0..inst.k {
        let ctx = FollowerContext::new(inst, k, ld.price.clone(), ld.placement_column(k));
        let tag = format!("_{k}");
        let lay = add_follower_primal(&mut lp, &ctx, &tag);
        let pin = optima[k] + slack * (1.0 + optima[k].abs());
        lp.add_row(format!("pin{tag}"), follower_objective(&ctx, &lay), RowSense::Le, pin);
        for j in 0..inst.n {
            obj.push((lay.y_edge[j], ld.price[j]));
            let unit = inst.variable_cost[j] / inst.compute_cap[j];
            for i in 0..inst.m {
                obj.push((lay.x_edge[i][j], -unit));
            }
        }
        layouts.push(lay);
    }
    for j in 0..inst.n {
        let cap = if ld.active[j] { inst.compute_cap[j] } else { 0.0 };
        lp.add_row(format!("joint[{j}]"), layouts.iter().map(|l| (l.y_edge[j], 1.0)), RowSense::Le, cap);
    }
    lp.set_objective(obj, 0.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => return Ok(None),
        s => return Err(CoreError::NoSolution(s)),
    }
    let values: Vec<f64> = sol.values.iter().zip(&lp.vars).map(|(&x, v)| x.clamp(v.lower, v.upper)).collect();
    let mut out = Vec::with_capacity(inst.k);
    for (k, lay) in layouts.iter().enumerate() {
        let mut fs = lay.read(&values);
        fs.cost = follower_cost(inst, &ld.price, k, &fs)?;
        if (fs.cost - optima[k]).abs() > tol::AGREEMENT * (1.0 + optima[k].abs()) {
            return Err(CoreError::NumericalIntegrity(format!(
                "second stage moved service {k} off its optimum: {} vs {}",
                fs.cost, optima[k]
            )));
        }
        out.push(fs);
    }
    Ok(Some(out))
}

fn evaluate(
    inst: &Instance,
    choice: &LeaderChoice,
    table: &HashMap<FollowerKey, Option<f64>>,
) -> Result<(CandidateOutcome, Option<Vec<FollowerSolution>>)> {
    let ld = LeaderDecision::from_choice(inst, choice);
    let violations = ld.leader_violations(inst);
    if !violations.is_empty() {
        return Ok((CandidateOutcome::Infeasible { reason: violations.join("; ") }, None));
    }
    let mut optima = Vec::with_capacity(inst.k);
    for k in 0..inst.k {
        let key = (k, choice.price_level.clone(), ld.placement_column(k));
        match table.get(&key).copied().flatten() {
            Some(c) => optima.push(c),
            None => {
                return Ok((
                    CandidateOutcome::Infeasible { reason: format!("follower {k} has no feasible response") },
                    None,
                ))
            }
        }
    }
    match optimistic_responses(inst, &ld, &optima)? {
        Some(fs) => {
            let profit = leader_profit(inst, &ld, &fs)?;
            Ok((CandidateOutcome::Feasible { profit }, Some(fs)))
        }
        None => Ok((CandidateOutcome::Infeasible { reason: "joint EN capacity exceeded".into() }, None)),
    }
}

pub fn brute_force_bilevel(inst: &Instance, limits: OracleLimits) -> Result<OracleResult> {
    brute_force_bilevel_with(inst, limits, Execution::default())
}

pub fn brute_force_bilevel_with(inst: &Instance, limits: OracleLimits, exec: Execution) -> Result<OracleResult> {
    brute_force_bilevel_restricted(inst, limits, exec, &|_| true)
}

/// Enumerates only the leader choices accepted by `keep`. The candidate
/// budget still applies to the unrestricted count.
pub fn brute_force_bilevel_restricted(
    inst: &Instance,
    limits: OracleLimits,
    exec: Execution,
    keep: &(dyn Fn(&LeaderChoice) -> bool + Sync),
) -> Result<OracleResult> {
    ensure_valid(inst)?;
    let required = candidate_count(inst).unwrap_or(u128::MAX);
    if required > limits.max_candidates {
        return Err(CoreError::CandidateBudget { required, limit: limits.max_candidates });
    }
    let choices: Vec<LeaderChoice> = all_choices(inst).into_iter().filter(|c| keep(c)).collect();
    let table = follower_table(inst, &choices, exec)?;
    let outcomes = par::map(&choices, exec, |c| evaluate(inst, c, &table).map(|(o, _)| o));
    let mut log = Vec::with_capacity(choices.len());
    let mut best: Option<(f64, usize)> = None;
    for (idx, (choice, outcome)) in choices.iter().zip(outcomes).enumerate() {
        let outcome = outcome?;
        if let CandidateOutcome::Feasible { profit } = outcome {
            if best.map_or(true, |(b, _)| profit > b) {
                best = Some((profit, idx));
            }
        }
        log.push(CandidateRecord { choice: choice.clone(), outcome });
    }
    let Some((best_profit, idx)) = best else {
        return Err(CoreError::Infeasible("no leader decision admits feasible follower responses".into()));
    };
    let (_, followers) = evaluate(inst, &choices[idx], &table)?;
    Ok(OracleResult {
        best_profit,
        best_decision: LeaderDecision::from_choice(inst, &choices[idx]),
        followers: followers.expect("best candidate is feasible"),
        log,
        candidates_examined: choices.len(),
    })
}

/// What a MILP run claims about an instance.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MilpClaim {
    pub profit: f64,
    #[serde(serialize_with = "crate::model::serialize_status")]
    pub status: Status,
    pub relative_gap: f64,
    pub decision: Option<LeaderDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The MILP was not solved tightly enough to confirm or refute agreement.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub verdict: Verdict,
    pub oracle_profit: f64,
    pub milp_profit: f64,
    pub difference: f64,
    /// Both decision sets, filled in whenever the verdict is not a pass.
    pub detail: Option<String>,
}

pub fn compare(oracle: &OracleResult, claim: &MilpClaim) -> ComparisonReport {
    let difference = (oracle.best_profit - claim.profit).abs();
    let allowed = tol::AGREEMENT * (1.0 + oracle.best_profit.abs());
    let proven = claim.status == Status::Optimal && claim.relative_gap <= tol::AGREEMENT;
    let verdict = if difference <= allowed {
        Verdict::Pass
    } else if !proven {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    let detail = (verdict != Verdict::Pass).then(|| {
        format!(
            "oracle decision {:?} (profit {}); milp decision {:?} (profit {}, status {:?}, gap {})",
            oracle.best_decision, oracle.best_profit, claim.decision, claim.profit, claim.status, claim.relative_gap
        )
    });
    ComparisonReport { verdict, oracle_profit: oracle.best_profit, milp_profit: claim.profit, difference, detail }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::small;

    #[test]
    fn raw_candidate_count() {
        assert_eq!(candidate_count(&small(3, 2, 2, 3)), Some(9 * 4 * 16));
        assert_eq!(all_choices(&small(1, 2, 1, 2)).len(), 4 * 4 * 4);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = small(2, 2, 2, 3);
        let err = brute_force_bilevel(&inst, OracleLimits { max_candidates: 10 }).unwrap_err();
        assert!(matches!(err, CoreError::CandidateBudget { required: 576, limit: 10 }));
    }

    #[test]
    fn no_services_gives_zero() {
        let inst = small(2, 2, 0, 2);
        let res = brute_force_bilevel(&inst, OracleLimits::default()).unwrap();
        assert_eq!(res.best_profit, 0.0);
        assert!(res.best_decision.active.iter().all(|a| !a));
    }

    #[test]
    fn storage_blocks_every_placement() {
        let mut inst = small(2, 1, 2, 2);
        inst.storage_cap = vec![5.0];
        let res = brute_force_bilevel(&inst, OracleLimits::default()).unwrap();
        assert!(res.best_decision.placed[0].iter().all(|t| !t));
        assert!(res.best_profit <= 0.0);
        assert_eq!(res.best_profit, 0.0);
        assert!(!res.best_decision.active[0]);
    }

    #[test]
    fn best_is_the_maximum_of_the_log() {
        let inst = small(2, 1, 1, 2);
        let res = brute_force_bilevel(&inst, OracleLimits::default()).unwrap();
        let max = res
            .log
            .iter()
            .filter_map(|r| match r.outcome {
                CandidateOutcome::Feasible { profit } => Some(profit),
                _ => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, res.best_profit);
        let again = leader_profit(&inst, &res.best_decision, &res.followers).unwrap();
        assert!((again - res.best_profit).abs() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let inst = small(2, 2, 1, 2);
        let a = brute_force_bilevel_with(&inst, OracleLimits::default(), Execution::Parallel).unwrap();
        let b = brute_force_bilevel_with(&inst, OracleLimits::default(), Execution::Sequential).unwrap();
        assert_eq!(a.best_profit, b.best_profit);
        assert_eq!(a.best_decision, b.best_decision);
    }

    #[test]
    fn comparison_verdicts() {
        let inst = small(2, 1, 1, 2);
        let res = brute_force_bilevel(&inst, OracleLimits::default()).unwrap();
        let claim = |profit, status, relative_gap| MilpClaim { profit, status, relative_gap, decision: None };
        assert_eq!(compare(&res, &claim(res.best_profit, Status::Optimal, 0.0)).verdict, Verdict::Pass);
        let off = res.best_profit - 0.05;
        assert_eq!(compare(&res, &claim(off, Status::Optimal, 0.1)).verdict, Verdict::Inconclusive);
        let bad = compare(&res, &claim(off, Status::Optimal, 0.0));
        assert_eq!(bad.verdict, Verdict::Fail);
        assert!(bad.detail.is_some());
    }
}
