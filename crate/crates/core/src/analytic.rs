//! Closed-form solver for instances with a single edge node.
//!
//! With one EN, each follower LP collapses to a continuous knapsack: every AP
//! splits its demand between the cloud and the EN, the per-unit saving of
//! offloading is `(p0 + w·d0) − (p1 + w·d)`, and the budget turns into a cap
//! (or a floor, when the EN is cheaper than the cloud) on the total offload.
//! Delay caps and eligibility become per-AP bounds. Filling APs in order of
//! decreasing saving solves the LP exactly.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::follower::FollowerFamily;
use crate::model::{ensure_valid, follower_cost, leader_profit, tol, FollowerSolution, Instance, LeaderDecision};

/// How the platform picks the placed services at a given price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementPolicy {
    /// Every storage-feasible subset of services is tried.
    #[default]
    Exhaustive,
    /// Place every service that buys edge resource; drop the least valuable
    /// ones while storage overflows. Prices are scanned downward from the top
    /// and the scan stops at the first price where demand exceeds capacity.
    AllBuyers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnCase {
    /// EN price at or below the cloud price.
    Case1,
    /// EN price above the cloud price.
    Case2,
}

/// Follower reaction to one EN price.
#[derive(Debug, Clone, PartialEq)]
pub enum BestResponse {
    Served(FollowerSolution),
    Infeasible(FollowerFamily),
}

impl BestResponse {
    pub fn served(&self) -> Option<&FollowerSolution> {
        match self {
            Self::Served(f) => Some(f),
            Self::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum PriceOutcome {
    Feasible {
        profit: f64,
        placed: Vec<bool>,
        #[serde(skip)]
        followers: Vec<FollowerSolution>,
    },
    Infeasible {
        reason: String,
    },
    /// Below the price where the downward scan stopped.
    NotEvaluated,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PriceEvaluation {
    pub level: usize,
    pub price: f64,
    pub outcome: PriceOutcome,
}

impl PriceEvaluation {
    pub fn profit(&self) -> Option<f64> {
        match &self.outcome {
            PriceOutcome::Feasible { profit, .. } => Some(*profit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SingleEnResult {
    pub profit: f64,
    pub decision: LeaderDecision,
    #[serde(skip)]
    pub followers: Vec<FollowerSolution>,
    /// `None` when leaving the EN idle is optimal.
    pub case: Option<EnCase>,
    pub per_price: Vec<PriceEvaluation>,
    /// Profit of keeping the EN inactive; `None` if some service cannot be
    /// served by the cloud alone.
    pub inactive_profit: Option<f64>,
}

fn require_single_en(inst: &Instance) -> Result<()> {
    if inst.n != 1 {
        return Err(CoreError::InvalidArgument(format!("the closed form needs exactly one EN, got {}", inst.n)));
    }
    Ok(())
}

/// Best response of service `k` with the service placed at the EN.
pub fn follower_best_response_single_en(inst: &Instance, k: usize, p1: f64) -> Result<BestResponse> {
    require_single_en(inst)?;
    if k >= inst.k {
        return Err(CoreError::InvalidArgument(format!("service {k} does not exist")));
    }
    Ok(best_response(inst, k, p1, true))
}

/// Exact greedy solution of the single-EN follower LP.
pub(crate) fn best_response(inst: &Instance, k: usize, p1: f64, placed: bool) -> BestResponse {
    let p0 = inst.cloud_price;
    let w = inst.delay_weight[k];
    let dmax = inst.delay_cap[k];
    let m = inst.m;
    let mut lb = vec![0.0; m];
    let mut ub = vec![0.0; m];
    for i in 0..m {
        let r = inst.demand[i][k];
        let (d0, d) = (inst.delay_cloud[i], inst.delay_edge[i][0]);
        ub[i] = if placed && inst.eligible[i][0][k] == 1 { r } else { 0.0 };
        if r <= 0.0 {
            continue;
        }
        // Delay cap on AP i: x·(d − d0) ≤ R·(Dmax − d0).
        let rhs = r * (dmax - d0);
        let slope = d - d0;
        if slope.abs() <= 1e-12 {
            if rhs < -tol::FEAS {
                return BestResponse::Infeasible(FollowerFamily::DelayCap);
            }
        } else if slope < 0.0 {
            lb[i] = (rhs / slope).max(0.0);
        } else {
            ub[i] = ub[i].min(rhs / slope);
        }
        if lb[i] > ub[i] + tol::FEAS {
            return BestResponse::Infeasible(if placed {
                FollowerFamily::DelayCap
            } else {
                FollowerFamily::EdgeCapacity
            });
        }
        lb[i] = lb[i].min(ub[i]);
    }
    let total_r = inst.total_demand(k);
    // Budget: (p1 − p0)·Σx ≤ B − p0·ΣR.
    let slack = inst.budget[k] - p0 * total_r;
    let cap = if placed { inst.compute_cap[0] } else { 0.0 };
    let (mut lo_total, mut hi_total) = (0.0, cap);
    let gap = p1 - p0;
    if gap.abs() <= 1e-15 {
        if slack < -tol::FEAS {
            return BestResponse::Infeasible(FollowerFamily::Budget);
        }
    } else if gap > 0.0 {
        hi_total = hi_total.min(slack / gap);
    } else {
        lo_total = slack / gap;
    }
    let sum_lb: f64 = lb.iter().sum();
    let sum_ub: f64 = ub.iter().sum();
    if sum_lb > hi_total + tol::FEAS {
        let family = if hi_total < cap { FollowerFamily::Budget } else { FollowerFamily::EdgeCapacity };
        return BestResponse::Infeasible(family);
    }
    if lo_total > sum_ub.min(hi_total) + tol::FEAS {
        return BestResponse::Infeasible(FollowerFamily::Budget);
    }

    let saving: Vec<f64> = (0..m).map(|i| (p0 + w * inst.delay_cloud[i]) - (p1 + w * inst.delay_edge[i][0])).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| saving[b].total_cmp(&saving[a]));
    let mut x = lb.clone();
    let mut total = sum_lb;
    for &i in &order {
        let target = if saving[i] > 0.0 { hi_total } else { lo_total.min(hi_total) };
        let room = (target - total).max(0.0);
        let add = (ub[i] - x[i]).min(room).max(0.0);
        x[i] += add;
        total += add;
    }

    let x_cloud: Vec<f64> = (0..m).map(|i| inst.demand[i][k] - x[i]).collect();
    let avg_delay = (0..m)
        .map(|i| {
            let r = inst.demand[i][k];
            if r > 0.0 {
                ((x_cloud[i] * inst.delay_cloud[i] + x[i] * inst.delay_edge[i][0]) / r).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut fs = FollowerSolution {
        y_cloud: x_cloud.iter().sum(),
        x_cloud,
        x_edge: x.iter().map(|&v| vec![v]).collect(),
        y_edge: vec![total],
        avg_delay,
        cost: 0.0,
    };
    fs.cost = follower_cost(inst, &[p1], k, &fs).unwrap_or(f64::NAN);
    BestResponse::Served(fs)
}

fn decision(inst: &Instance, level: usize, placed: &[bool]) -> LeaderDecision {
    let active = placed.iter().any(|&t| t);
    LeaderDecision {
        price_level: vec![level],
        price: vec![inst.price_grid[0][level]],
        active: vec![active],
        placed: vec![placed.to_vec()],
    }
}

struct Candidate {
    profit: f64,
    placed: Vec<bool>,
    followers: Vec<FollowerSolution>,
}

/// Evaluates one placement at one price; `Err` carries the infeasibility reason.
fn evaluate(
    inst: &Instance,
    level: usize,
    placed: &[bool],
    on: &[BestResponse],
    off: &[BestResponse],
) -> std::result::Result<Candidate, String> {
    let mut followers = Vec::with_capacity(inst.k);
    for k in 0..inst.k {
        let resp = if placed[k] { &on[k] } else { &off[k] };
        match resp {
            BestResponse::Served(f) => followers.push(f.clone()),
            BestResponse::Infeasible(fam) => return Err(format!("service {k} infeasible ({fam})")),
        }
    }
    let used: f64 = (0..inst.k).filter(|&k| placed[k]).map(|k| inst.service_size[k]).sum();
    if used > inst.storage_cap[0] + tol::FEAS {
        return Err(format!("storage {used} exceeds {}", inst.storage_cap[0]));
    }
    let sold: f64 = followers.iter().map(|f| f.y_edge[0]).sum();
    if sold > inst.compute_cap[0] + tol::FEAS {
        return Err(format!("demand {sold} exceeds capacity {}", inst.compute_cap[0]));
    }
    let profit = leader_profit(inst, &decision(inst, level, placed), &followers).map_err(|e| e.to_string())?;
    Ok(Candidate { profit, placed: placed.to_vec(), followers })
}

fn exhaustive(inst: &Instance, level: usize, on: &[BestResponse], off: &[BestResponse]) -> PriceOutcome {
    let mut best: Option<Candidate> = None;
    let mut last_reason = String::from("no placement evaluated");
    for mask in 1u64..(1u64 << inst.k) {
        let placed: Vec<bool> = (0..inst.k).map(|k| mask >> k & 1 == 1).collect();
        match evaluate(inst, level, &placed, on, off) {
            Ok(c) => {
                if best.as_ref().map_or(true, |b| c.profit > b.profit) {
                    best = Some(c);
                }
            }
            Err(r) => last_reason = r,
        }
    }
    match best {
        Some(c) => PriceOutcome::Feasible { profit: c.profit, placed: c.placed, followers: c.followers },
        None => PriceOutcome::Infeasible { reason: last_reason },
    }
}

/// Returns the outcome and whether demand overflowed the EN.
fn all_buyers(inst: &Instance, level: usize, on: &[BestResponse], off: &[BestResponse]) -> (PriceOutcome, bool) {
    let p1 = inst.price_grid[0][level];
    let unit = p1 - inst.variable_cost[0] / inst.compute_cap[0];
    let mut placed: Vec<bool> = on.iter().map(|r| r.served().is_some_and(|f| f.y_edge[0] > tol::FEAS)).collect();
    let value = |k: usize| on[k].served().map_or(0.0, |f| unit * f.y_edge[0]) - inst.placement_cost[0][k];
    loop {
        let used: f64 = (0..inst.k).filter(|&k| placed[k]).map(|k| inst.service_size[k]).sum();
        if used <= inst.storage_cap[0] + tol::FEAS {
            break;
        }
        let drop = (0..inst.k).filter(|&k| placed[k]).min_by(|&a, &b| value(a).total_cmp(&value(b))).unwrap();
        placed[drop] = false;
    }
    let sold: f64 = (0..inst.k).filter(|&k| placed[k]).filter_map(|k| on[k].served()).map(|f| f.y_edge[0]).sum();
    let overflow = sold > inst.compute_cap[0] + tol::FEAS;
    if !placed.iter().any(|&t| t) {
        return (PriceOutcome::Infeasible { reason: "no service buys edge resource".into() }, overflow);
    }
    match evaluate(inst, level, &placed, on, off) {
        Ok(c) => (PriceOutcome::Feasible { profit: c.profit, placed: c.placed, followers: c.followers }, overflow),
        Err(reason) => (PriceOutcome::Infeasible { reason }, overflow),
    }
}

pub fn solve_single_en(inst: &Instance) -> Result<SingleEnResult> {
    solve_single_en_with(inst, PlacementPolicy::default())
}

pub fn solve_single_en_with(inst: &Instance, policy: PlacementPolicy) -> Result<SingleEnResult> {
    require_single_en(inst)?;
    ensure_valid(inst)?;
    if policy == PlacementPolicy::Exhaustive && inst.k > 20 {
        return Err(CoreError::CandidateBudget { required: 1u128 << inst.k, limit: 1 << 20 });
    }
    let off: Vec<BestResponse> = (0..inst.k).map(|k| best_response(inst, k, inst.price_grid[0][0], false)).collect();
    let inactive_profit = off.iter().all(|r| r.served().is_some()).then_some(0.0);

    let mut per_price: Vec<PriceEvaluation> = Vec::with_capacity(inst.v);
    let mut stopped = false;
    for level in (0..inst.v).rev() {
        let price = inst.price_grid[0][level];
        let outcome = if stopped {
            PriceOutcome::NotEvaluated
        } else {
            let on: Vec<BestResponse> = (0..inst.k).map(|k| best_response(inst, k, price, true)).collect();
            match policy {
                PlacementPolicy::Exhaustive => exhaustive(inst, level, &on, &off),
                PlacementPolicy::AllBuyers => {
                    let (out, overflow) = all_buyers(inst, level, &on, &off);
                    stopped = overflow;
                    out
                }
            }
        };
        per_price.push(PriceEvaluation { level, price, outcome });
    }
    per_price.reverse();

    // Scan from the top price so ties keep the higher price.
    let mut best: Option<&PriceEvaluation> = None;
    for ev in per_price.iter().rev() {
        if let Some(p) = ev.profit() {
            if best.and_then(|b| b.profit()).map_or(true, |bp| p > bp) {
                best = Some(ev);
            }
        }
    }
    let chosen = match (best, inactive_profit) {
        (Some(ev), Some(ip)) => (ev.profit().unwrap() > ip).then_some(ev),
        (Some(ev), None) => Some(ev),
        (None, Some(_)) => None,
        (None, None) => return Err(CoreError::Infeasible("no price admits a feasible single-EN outcome".into())),
    };
    Ok(match chosen {
        Some(ev) => {
            let PriceOutcome::Feasible { profit, placed, followers } = &ev.outcome else { unreachable!() };
            SingleEnResult {
                profit: *profit,
                decision: decision(inst, ev.level, placed),
                followers: followers.clone(),
                case: Some(if ev.price <= inst.cloud_price { EnCase::Case1 } else { EnCase::Case2 }),
                per_price,
                inactive_profit,
            }
        }
        None => SingleEnResult {
            profit: 0.0,
            decision: LeaderDecision::idle(inst),
            followers: off.iter().map(|r| r.served().unwrap().clone()).collect(),
            case: None,
            per_price,
            inactive_profit,
        },
    })
}
