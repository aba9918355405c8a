//! Problem data, leader/follower decision records and the two objective
//! functions every other module evaluates against.
//!
//! Index conventions used throughout the crate: `i` is an access point
//! (`0..M`), `j` an edge node (`0..N`), `k` a service (`0..K`) and `v` a
//! price level (`0..V`). Arrays are row-major in the order their names list
//! the indices, e.g. `demand[i][k]` and `delay_edge[i][j]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Numerical tolerances shared by the whole crate.
pub mod tol {
    /// Absolute primal feasibility tolerance.
    pub const FEAS: f64 = edgeprice_lp::FEAS_TOL;
    /// Binary rounding tolerance used when extracting MILP points.
    pub const INTEGRALITY: f64 = 1e-6;
    /// Relative agreement between a MILP objective and its recomputed profit.
    pub const PROFIT_RECOMPUTE: f64 = 1e-5;
    /// Relative agreement between follower primal and dual objectives.
    pub const STRONG_DUALITY: f64 = 1e-7;
    /// Relative agreement between independently computed optimal profits.
    pub const AGREEMENT: f64 = 1e-6;
    /// Absolute bound on multiplier-times-slack products.
    pub const COMPLEMENTARITY: f64 = 1e-5;
}

/// Serializes an LP status by its display name.
pub(crate) fn serialize_status<S: serde::Serializer>(
    s: &edgeprice_lp::Status,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(s.as_str())
}

/// Where an instance came from. Written by the scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Instance {
    #[serde(rename = "schema_version")]
    pub schema_version: u32,
    #[serde(rename = "numAps")]
    pub m: usize,
    #[serde(rename = "numEns")]
    pub n: usize,
    #[serde(rename = "numServices")]
    pub k: usize,
    #[serde(rename = "numPriceLevels")]
    pub v: usize,
    /// `R[i][k]`, vCPU.
    pub demand: Vec<Vec<f64>>,
    /// `d[i][j]`, ms.
    pub delay_edge: Vec<Vec<f64>>,
    /// `d0[i]`, ms.
    pub delay_cloud: Vec<f64>,
    pub cloud_price: f64,
    /// `pg[j][v]`, strictly ascending in `v`.
    pub price_grid: Vec<Vec<f64>>,
    pub compute_cap: Vec<f64>,
    pub storage_cap: Vec<f64>,
    pub fixed_cost: Vec<f64>,
    pub variable_cost: Vec<f64>,
    /// `phi[j][k]`.
    pub placement_cost: Vec<Vec<f64>>,
    pub service_size: Vec<f64>,
    pub budget: Vec<f64>,
    pub delay_weight: Vec<f64>,
    pub delay_cap: Vec<f64>,
    /// `a[i][j][k]` in {0, 1}.
    pub eligible: Vec<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Prices, activation and placement chosen by the platform.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaderChoice {
    pub price_level: Vec<usize>,
    pub active: Vec<bool>,
    /// `placed[j][k]`.
    pub placed: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaderDecision {
    pub price_level: Vec<usize>,
    pub price: Vec<f64>,
    pub active: Vec<bool>,
    pub placed: Vec<Vec<bool>>,
}

impl LeaderDecision {
    pub fn from_choice(inst: &Instance, c: &LeaderChoice) -> Self {
        Self {
            price: c.price_level.iter().enumerate().map(|(j, &l)| inst.price_grid[j][l]).collect(),
            price_level: c.price_level.clone(),
            active: c.active.clone(),
            placed: c.placed.clone(),
        }
    }

    pub fn choice(&self) -> LeaderChoice {
        LeaderChoice { price_level: self.price_level.clone(), active: self.active.clone(), placed: self.placed.clone() }
    }

    /// Every EN inactive, nothing placed, lowest price level.
    pub fn idle(inst: &Instance) -> Self {
        Self::from_choice(
            inst,
            &LeaderChoice {
                price_level: vec![0; inst.n],
                active: vec![false; inst.n],
                placed: vec![vec![false; inst.k]; inst.n],
            },
        )
    }

    pub fn placement_column(&self, k: usize) -> Vec<bool> {
        self.placed.iter().map(|row| row[k]).collect()
    }

    /// Violations of placement-needs-activation and storage capacity.
    pub fn leader_violations(&self, inst: &Instance) -> Vec<String> {
        let mut out = Vec::new();
        for j in 0..inst.n {
            let mut used = 0.0;
            for k in 0..inst.k {
                if self.placed[j][k] {
                    if !self.active[j] {
                        out.push(format!("service {k} placed on inactive EN {j}"));
                    }
                    used += inst.service_size[k];
                }
            }
            let cap = if self.active[j] { inst.storage_cap[j] } else { 0.0 };
            if used > cap + tol::FEAS {
                out.push(format!("storage exceeded at EN {j}: {used} > {cap}"));
            }
            if (self.price[j] - inst.price_grid[j][self.price_level[j]]).abs() > 0.0 {
                out.push(format!("price at EN {j} is not grid level {}", self.price_level[j]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FollowerSolution {
    pub x_cloud: Vec<f64>,
    /// `x[i][j]`.
    pub x_edge: Vec<Vec<f64>>,
    pub y_cloud: f64,
    pub y_edge: Vec<f64>,
    pub avg_delay: Vec<f64>,
    pub cost: f64,
}

impl FollowerSolution {
    pub fn all_cloud(inst: &Instance, k: usize) -> Self {
        let x_cloud: Vec<f64> = (0..inst.m).map(|i| inst.demand[i][k]).collect();
        Self {
            y_cloud: x_cloud.iter().sum(),
            avg_delay: (0..inst.m).map(|i| if inst.demand[i][k] > 0.0 { inst.delay_cloud[i] } else { 0.0 }).collect(),
            x_cloud,
            x_edge: vec![vec![0.0; inst.n]; inst.m],
            y_edge: vec![0.0; inst.n],
            cost: 0.0,
        }
    }

    pub fn edge_total(&self) -> f64 {
        self.y_edge.iter().sum()
    }
}

/// Follower multipliers in the sign convention of the follower dual LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DualSolution {
    pub xi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
    pub zeta: Vec<f64>,
    pub eps: Vec<Vec<f64>>,
}

impl DualSolution {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            xi: vec![0.0; m],
            sigma: vec![0.0; m],
            tau: vec![0.0; m],
            mu1: 0.0,
            mu2: 0.0,
            lambda: vec![0.0; n],
            gamma: vec![0.0; n],
            eta: vec![vec![0.0; n]; m],
            zeta: vec![0.0; m],
            eps: vec![vec![0.0; n]; m],
        }
    }

    /// Most negative entry among the sign-constrained multipliers (0 if none).
    pub fn sign_violation(&self) -> f64 {
        let flat = self
            .tau
            .iter()
            .chain(&self.lambda)
            .chain(&self.gamma)
            .chain(&self.zeta)
            .chain(self.eta.iter().flatten())
            .chain(self.eps.iter().flatten())
            .chain([&self.mu1, &self.mu2]);
        flat.fold(0.0f64, |acc, &v| acc.max(-v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingFactors {
    /// δ, multiplies demand.
    pub demand: f64,
    /// Λ, multiplies the delay weights.
    pub penalty: f64,
    /// γ0, multiplies compute capacity.
    pub capacity: f64,
    /// ϱ, multiplies the cloud price.
    pub cloud_price: f64,
}

impl Default for ScalingFactors {
    fn default() -> Self {
        Self { demand: 1.0, penalty: 1.0, capacity: 1.0, cloud_price: 1.0 }
    }
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(CoreError::InvalidArgument(format!("unsupported schema_version {v}"))),
            None => return Err(CoreError::InvalidArgument("missing schema_version".into())),
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn total_demand(&self, k: usize) -> f64 {
        (0..self.m).map(|i| self.demand[i][k]).sum()
    }

    pub fn is_eligible(&self, i: usize, j: usize, k: usize) -> bool {
        self.eligible[i][j][k] == 1
    }

    /// True when every EN shares one price column.
    pub fn uniform_grid(&self) -> bool {
        self.price_grid.windows(2).all(|w| w[0] == w[1])
    }
}

/// Lists every violated structural invariant. An empty list means the
/// instance is well formed.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    let (m, n, k, v) = (inst.m, inst.n, inst.k, inst.v);
    let mut dims = |name: &str, got: usize, want: usize| {
        if got != want {
            out.push(format!("{name} has length {got}, expected {want}"));
        }
    };
    dims("demand", inst.demand.len(), m);
    dims("delayEdge", inst.delay_edge.len(), m);
    dims("delayCloud", inst.delay_cloud.len(), m);
    dims("priceGrid", inst.price_grid.len(), n);
    dims("computeCap", inst.compute_cap.len(), n);
    dims("storageCap", inst.storage_cap.len(), n);
    dims("fixedCost", inst.fixed_cost.len(), n);
    dims("variableCost", inst.variable_cost.len(), n);
    dims("placementCost", inst.placement_cost.len(), n);
    dims("serviceSize", inst.service_size.len(), k);
    dims("budget", inst.budget.len(), k);
    dims("delayWeight", inst.delay_weight.len(), k);
    dims("delayCap", inst.delay_cap.len(), k);
    dims("eligible", inst.eligible.len(), m);
    for (i, row) in inst.demand.iter().enumerate() {
        dims(&format!("demand[{i}]"), row.len(), k);
    }
    for (i, row) in inst.delay_edge.iter().enumerate() {
        dims(&format!("delayEdge[{i}]"), row.len(), n);
    }
    for (j, row) in inst.price_grid.iter().enumerate() {
        dims(&format!("priceGrid[{j}]"), row.len(), v);
    }
    for (j, row) in inst.placement_cost.iter().enumerate() {
        dims(&format!("placementCost[{j}]"), row.len(), k);
    }
    for (i, row) in inst.eligible.iter().enumerate() {
        dims(&format!("eligible[{i}]"), row.len(), n);
        for (j, cell) in row.iter().enumerate() {
            dims(&format!("eligible[{i}][{j}]"), cell.len(), k);
        }
    }
    if !out.is_empty() {
        return out;
    }
    if inst.schema_version != SCHEMA_VERSION {
        out.push(format!("schema_version {} is not {SCHEMA_VERSION}", inst.schema_version));
    }

    let mut nonneg = |label: String, x: f64, strict: bool| {
        if !x.is_finite() {
            out.push(format!("non-finite {label}"));
        } else if x < 0.0 || (strict && x == 0.0) {
            let word = if strict { "non-positive" } else { "negative" };
            out.push(format!("{word} {label}"));
        }
    };
    for i in 0..m {
        for kk in 0..k {
            nonneg(format!("demand at ({i},{kk})"), inst.demand[i][kk], false);
        }
        for j in 0..n {
            nonneg(format!("delayEdge at ({i},{j})"), inst.delay_edge[i][j], false);
        }
        nonneg(format!("delayCloud at {i}"), inst.delay_cloud[i], false);
    }
    nonneg("cloudPrice".into(), inst.cloud_price, true);
    for j in 0..n {
        nonneg(format!("computeCap at {j}"), inst.compute_cap[j], true);
        nonneg(format!("storageCap at {j}"), inst.storage_cap[j], true);
        nonneg(format!("fixedCost at {j}"), inst.fixed_cost[j], false);
        nonneg(format!("variableCost at {j}"), inst.variable_cost[j], false);
        for kk in 0..k {
            nonneg(format!("placementCost at ({j},{kk})"), inst.placement_cost[j][kk], false);
        }
        for l in 0..v {
            nonneg(format!("priceGrid at ({j},{l})"), inst.price_grid[j][l], false);
        }
    }
    for kk in 0..k {
        nonneg(format!("serviceSize at {kk}"), inst.service_size[kk], true);
        nonneg(format!("budget at {kk}"), inst.budget[kk], true);
        nonneg(format!("delayWeight at {kk}"), inst.delay_weight[kk], false);
        nonneg(format!("delayCap at {kk}"), inst.delay_cap[kk], true);
    }
    if v == 0 {
        out.push("numPriceLevels must be at least 1".into());
    }
    for j in 0..n {
        if inst.price_grid[j].windows(2).any(|w| !(w[0] < w[1])) {
            out.push(format!("priceGrid not ascending at j={j}"));
        }
    }
    for i in 0..m {
        for j in 0..n {
            for kk in 0..k {
                if inst.eligible[i][j][kk] > 1 {
                    out.push(format!("eligible at ({i},{j},{kk}) is {}, expected 0 or 1", inst.eligible[i][j][kk]));
                }
            }
        }
    }
    out
}

pub fn ensure_valid(inst: &Instance) -> Result<()> {
    let report = validate_instance(inst);
    if report.is_empty() {
        Ok(())
    } else {
        Err(CoreError::InvalidInstance(report))
    }
}

/// Returns a copy with `R ← δR`, `w ← Λw`, `C ← γ0·C` and `p0 ← ϱ·p0`.
pub fn scale_instance(inst: &Instance, f: &ScalingFactors) -> Result<Instance> {
    for (name, x) in
        [("demand", f.demand), ("penalty", f.penalty), ("capacity", f.capacity), ("cloud price", f.cloud_price)]
    {
        if !(x > 0.0 && x.is_finite()) {
            return Err(CoreError::InvalidArgument(format!("{name} scaling factor must be positive, got {x}")));
        }
    }
    let mut out = inst.clone();
    for row in &mut out.demand {
        for r in row {
            *r *= f.demand;
        }
    }
    for w in &mut out.delay_weight {
        *w *= f.penalty;
    }
    for c in &mut out.compute_cap {
        *c *= f.capacity;
    }
    out.cloud_price *= f.cloud_price;
    Ok(out)
}

fn check_follower_dims(inst: &Instance, fs: &FollowerSolution) -> Result<()> {
    let ok = fs.x_cloud.len() == inst.m
        && fs.x_edge.len() == inst.m
        && fs.x_edge.iter().all(|r| r.len() == inst.n)
        && fs.y_edge.len() == inst.n
        && fs.avg_delay.len() == inst.m;
    if ok {
        Ok(())
    } else {
        Err(CoreError::InvalidArgument("follower solution dimensions do not match the instance".into()))
    }
}

/// Revenue from edge sales minus activation, utilization and placement cost.
pub fn leader_profit(inst: &Instance, ld: &LeaderDecision, fs: &[FollowerSolution]) -> Result<f64> {
    if fs.len() != inst.k || ld.price.len() != inst.n || ld.active.len() != inst.n || ld.placed.len() != inst.n {
        return Err(CoreError::InvalidArgument(format!(
            "expected {} follower solutions and {} EN entries",
            inst.k, inst.n
        )));
    }
    for f in fs {
        check_follower_dims(inst, f)?;
    }
    let mut profit = 0.0;
    for j in 0..inst.n {
        let mut sold = 0.0;
        let mut routed = 0.0;
        for f in fs {
            sold += f.y_edge[j];
            routed += (0..inst.m).map(|i| f.x_edge[i][j]).sum::<f64>();
        }
        profit += ld.price[j] * sold;
        if ld.active[j] {
            profit -= inst.fixed_cost[j];
        }
        profit -= inst.variable_cost[j] * routed / inst.compute_cap[j];
        for k in 0..inst.k {
            if ld.placed[j][k] {
                profit -= inst.placement_cost[j][k];
            }
        }
    }
    Ok(profit)
}

/// Procurement cost plus weighted delay for service `k` at prices `p`.
pub fn follower_cost(inst: &Instance, p: &[f64], k: usize, fs: &FollowerSolution) -> Result<f64> {
    check_follower_dims(inst, fs)?;
    if p.len() != inst.n {
        return Err(CoreError::InvalidArgument(format!("expected {} prices, got {}", inst.n, p.len())));
    }
    let mut delay = 0.0;
    for i in 0..inst.m {
        delay += fs.x_cloud[i] * inst.delay_cloud[i];
        for j in 0..inst.n {
            delay += fs.x_edge[i][j] * inst.delay_edge[i][j];
        }
    }
    let pay: f64 = inst.cloud_price * fs.y_cloud + p.iter().zip(&fs.y_edge).map(|(a, b)| a * b).sum::<f64>();
    Ok(pay + inst.delay_weight[k] * delay)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A small hand-built instance with every EN eligible everywhere.
    pub fn small(m: usize, n: usize, k: usize, v: usize) -> Instance {
        let grid: Vec<f64> = (0..v).map(|l| 0.01 * (l + 1) as f64).collect();
        Instance {
            schema_version: SCHEMA_VERSION,
            m,
            n,
            k,
            v,
            demand: (0..m).map(|i| (0..k).map(|kk| 20.0 + (3 * i + 5 * kk) as f64).collect()).collect(),
            delay_edge: (0..m).map(|i| (0..n).map(|j| 5.0 + (2 * i + 3 * j) as f64).collect()).collect(),
            delay_cloud: vec![60.0; m],
            cloud_price: 0.01,
            price_grid: vec![grid; n],
            compute_cap: (0..n).map(|j| 64.0 + 32.0 * j as f64).collect(),
            storage_cap: vec![512.0; n],
            fixed_cost: (0..n).map(|j| 0.1 + 0.05 * j as f64).collect(),
            variable_cost: (0..n).map(|j| 0.08 + 0.04 * j as f64).collect(),
            placement_cost: vec![vec![0.02; k]; n],
            service_size: (0..k).map(|kk| 20.0 + 10.0 * kk as f64).collect(),
            budget: (0..k).map(|kk| 200.0 + 25.0 * kk as f64).collect(),
            delay_weight: (0..k).map(|kk| 5e-4 + 1e-4 * kk as f64).collect(),
            delay_cap: vec![80.0; k],
            eligible: vec![vec![vec![1; k]; n]; m],
            provenance: None,
        }
    }
}
