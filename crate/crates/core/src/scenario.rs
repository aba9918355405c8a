//! Seeded instance generator: preferential-attachment topology, shortest-path
//! delays and uniform parameter sampling.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::model::{ensure_valid, Instance, Provenance, SCHEMA_VERSION};

/// Identifier written into every generated instance.
pub const GENERATOR_ID: &str = "edgeprice-scenario/1 (rng: ChaCha8Rng, seed_from_u64)";

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.hi > self.lo {
            rng.gen_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub attachment: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub link_delay: Range,
    pub cloud_delay: f64,
    pub demand: Range,
    pub delay_cap: Range,
    pub price_grid: Vec<f64>,
    pub cloud_price: f64,
    /// Fixed cost of the smallest and largest capacity in the menu; values in
    /// between are interpolated linearly by capacity.
    pub fixed_cost: Range,
    pub variable_cost: Range,
    pub delay_weight: Range,
    pub placement_cost: f64,
    pub service_size: Range,
    pub budget: Range,
    /// vCPU sizes of the M5 family.
    pub capacity_menu: Vec<f64>,
    /// GB.
    pub storage_menu: Vec<f64>,
    pub allow_colocation: bool,
    /// Explicit `a[i][j][k]`; when absent an AP may use an EN iff the
    /// shortest-path delay is within the service's delay cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eligibility: Option<Vec<Vec<Vec<u8>>>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nodes: 100,
            attachment: 2,
            seed: 0,
            m: 10,
            n: 4,
            k: 6,
            link_delay: Range::new(2.0, 5.0),
            cloud_delay: 60.0,
            demand: Range::new(20.0, 35.0),
            delay_cap: Range::new(30.0, 100.0),
            price_grid: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            cloud_price: 0.01,
            fixed_cost: Range::new(0.05, 1.8),
            variable_cost: Range::new(0.04, 1.44),
            delay_weight: Range::new(1e-5, 1e-3),
            placement_cost: 0.02,
            service_size: Range::new(10.0, 100.0),
            budget: Range::new(150.0, 300.0),
            capacity_menu: vec![8.0, 16.0, 32.0, 48.0, 64.0, 96.0],
            storage_menu: vec![256.0, 512.0, 1024.0],
            allow_colocation: false,
            eligibility: None,
        }
    }
}

impl ScenarioConfig {
    pub fn sized(seed: u64, m: usize, n: usize, k: usize) -> Self {
        Self { seed, m, n, k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.nodes < self.attachment + 1 || self.attachment == 0 {
            problems.push(format!("{} nodes cannot host attachment rate {}", self.nodes, self.attachment));
        }
        if !self.allow_colocation && self.m + self.n > self.nodes {
            problems.push(format!("{} APs and {} ENs need distinct nodes, only {} exist", self.m, self.n, self.nodes));
        }
        if self.allow_colocation && (self.m > self.nodes || self.n > self.nodes) {
            problems.push(format!("more APs or ENs than the {} nodes", self.nodes));
        }
        for (name, r) in [
            ("linkDelay", self.link_delay),
            ("demand", self.demand),
            ("delayCap", self.delay_cap),
            ("fixedCost", self.fixed_cost),
            ("variableCost", self.variable_cost),
            ("delayWeight", self.delay_weight),
            ("serviceSize", self.service_size),
            ("budget", self.budget),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi && r.lo >= 0.0) {
                problems.push(format!("{name} range [{}, {}] is empty or negative", r.lo, r.hi));
            }
        }
        if self.price_grid.is_empty() || self.price_grid.windows(2).any(|w| w[0] >= w[1]) {
            problems.push("priceGrid must be non-empty and strictly ascending".into());
        }
        if self.capacity_menu.is_empty() || self.capacity_menu.iter().any(|&c| c <= 0.0) {
            problems.push("capacityMenu must hold positive sizes".into());
        }
        if self.storage_menu.is_empty() || self.storage_menu.iter().any(|&c| c <= 0.0) {
            problems.push("storageMenu must hold positive sizes".into());
        }
        if !(self.cloud_price > 0.0) {
            problems.push("cloudPrice must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CoreError::InvalidArgument(problems.join("; ")))
        }
    }

    /// SHA-256 of the canonical JSON of every field except the seed.
    pub fn config_hash(&self) -> String {
        let mut copy = self.clone();
        copy.seed = 0;
        let json = serde_json::to_string(&copy).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Topology {
    pub nodes: usize,
    /// `(u, v, delay_ms)` with `u < v`.
    pub edges: Vec<(usize, usize, f64)>,
}

impl Topology {
    pub fn graph(&self) -> UnGraph<(), f64> {
        let mut g = UnGraph::with_capacity(self.nodes, self.edges.len());
        for _ in 0..self.nodes {
            g.add_node(());
        }
        for &(u, v, d) in &self.edges {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(v), d);
        }
        g
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes];
        for &(u, v, _) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

fn attach(rng: &mut ChaCha8Rng, nodes: usize, rate: usize) -> Vec<(usize, usize)> {
    let core = rate + 1;
    let mut edges = Vec::with_capacity(core * rate / 2 + (nodes - core) * rate);
    // Each endpoint appears once per incident edge, so uniform draws from it
    // are degree-proportional.
    let mut ends: Vec<usize> = Vec::new();
    for u in 0..core {
        for v in u + 1..core {
            edges.push((u, v));
            ends.extend([u, v]);
        }
    }
    for new in core..nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(rate);
        while targets.len() < rate {
            let t = ends[rng.gen_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, new));
            ends.extend([t, new]);
        }
    }
    edges
}

pub fn generate_topology(cfg: &ScenarioConfig) -> Result<Topology> {
    if cfg.nodes < cfg.attachment + 1 || cfg.attachment == 0 {
        return Err(CoreError::InvalidArgument(format!(
            "{} nodes cannot host attachment rate {}",
            cfg.nodes, cfg.attachment
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(topology_from(&mut rng, cfg))
}

fn topology_from(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> Topology {
    let pairs = attach(rng, cfg.nodes, cfg.attachment);
    let edges = pairs.into_iter().map(|(u, v)| (u, v, cfg.link_delay.sample(rng))).collect();
    Topology { nodes: cfg.nodes, edges }
}

/// Shortest-path delay from every AP node to every EN node.
pub fn shortest_path_delays(topo: &Topology, ap_nodes: &[usize], en_nodes: &[usize]) -> Result<Vec<Vec<f64>>> {
    if let Some(&bad) = ap_nodes.iter().chain(en_nodes).find(|&&x| x >= topo.nodes) {
        return Err(CoreError::InvalidArgument(format!("node {bad} is not in the topology")));
    }
    let g = topo.graph();
    let mut out = Vec::with_capacity(ap_nodes.len());
    for &a in ap_nodes {
        let dist = dijkstra(&g, NodeIndex::new(a), None, |e| *e.weight());
        let mut row = Vec::with_capacity(en_nodes.len());
        for &e in en_nodes {
            match dist.get(&NodeIndex::new(e)) {
                Some(&d) => row.push(d),
                None => {
                    return Err(CoreError::InvalidArgument(format!("AP node {a} cannot reach EN node {e}")));
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Picks AP and EN nodes for a configuration.
fn pick_nodes(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> (Vec<usize>, Vec<usize>) {
    let all: Vec<usize> = (0..cfg.nodes).collect();
    if cfg.allow_colocation {
        let aps = all.choose_multiple(rng, cfg.m).copied().collect();
        let ens = all.choose_multiple(rng, cfg.n).copied().collect();
        (aps, ens)
    } else {
        let picked: Vec<usize> = all.choose_multiple(rng, cfg.m + cfg.n).copied().collect();
        (picked[..cfg.m].to_vec(), picked[cfg.m..].to_vec())
    }
}

fn interpolate(range: Range, menu: &[f64], cap: f64) -> f64 {
    let lo = menu.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = menu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return range.lo;
    }
    range.lo + (range.hi - range.lo) * (cap - lo) / (hi - lo)
}

pub fn sample_instance(cfg: &ScenarioConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topo = topology_from(&mut rng, cfg);
    let (aps, ens) = pick_nodes(&mut rng, cfg);
    let delay_edge = shortest_path_delays(&topo, &aps, &ens)?;
    let (m, n, k) = (cfg.m, cfg.n, cfg.k);

    let demand: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| cfg.demand.sample(&mut rng)).collect()).collect();
    let mut compute_cap = Vec::with_capacity(n);
    let mut storage_cap = Vec::with_capacity(n);
    for _ in 0..n {
        compute_cap.push(*cfg.capacity_menu.choose(&mut rng).unwrap());
        storage_cap.push(*cfg.storage_menu.choose(&mut rng).unwrap());
    }
    let fixed_cost = compute_cap.iter().map(|&c| interpolate(cfg.fixed_cost, &cfg.capacity_menu, c)).collect();
    let variable_cost = compute_cap.iter().map(|&c| interpolate(cfg.variable_cost, &cfg.capacity_menu, c)).collect();
    let mut service_size = Vec::with_capacity(k);
    let mut budget = Vec::with_capacity(k);
    let mut delay_weight = Vec::with_capacity(k);
    let mut delay_cap = Vec::with_capacity(k);
    for _ in 0..k {
        service_size.push(cfg.service_size.sample(&mut rng));
        budget.push(cfg.budget.sample(&mut rng));
        delay_weight.push(cfg.delay_weight.sample(&mut rng));
        delay_cap.push(cfg.delay_cap.sample(&mut rng));
    }
    let eligible = match &cfg.eligibility {
        Some(a) => a.clone(),
        None => (0..m)
            .map(|i| (0..n).map(|j| (0..k).map(|kk| u8::from(delay_edge[i][j] <= delay_cap[kk])).collect()).collect())
            .collect(),
    };
    let inst = Instance {
        schema_version: SCHEMA_VERSION,
        m,
        n,
        k,
        v: cfg.price_grid.len(),
        demand,
        delay_edge,
        delay_cloud: vec![cfg.cloud_delay; m],
        cloud_price: cfg.cloud_price,
        price_grid: vec![cfg.price_grid.clone(); n],
        compute_cap,
        storage_cap,
        fixed_cost,
        variable_cost,
        placement_cost: vec![vec![cfg.placement_cost; k]; n],
        service_size,
        budget,
        delay_weight,
        delay_cap,
        eligible,
        provenance: Some(Provenance {
            seed: cfg.seed,
            generator: GENERATOR_ID.to_string(),
            config_hash: cfg.config_hash(),
            note: None,
        }),
    };
    ensure_valid(&inst)?;
    Ok(inst)
}

/// Checks every sampled field against the configured ranges; returns the
/// offending field names.
pub fn audit_ranges(cfg: &ScenarioConfig, inst: &Instance) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    check("demand", inst.demand.iter().flatten().all(|&x| cfg.demand.contains(x)));
    check("serviceSize", inst.service_size.iter().all(|&x| cfg.service_size.contains(x)));
    check("budget", inst.budget.iter().all(|&x| cfg.budget.contains(x)));
    check("delayWeight", inst.delay_weight.iter().all(|&x| cfg.delay_weight.contains(x)));
    check("delayCap", inst.delay_cap.iter().all(|&x| cfg.delay_cap.contains(x)));
    check("fixedCost", inst.fixed_cost.iter().all(|&x| cfg.fixed_cost.contains(x)));
    check("variableCost", inst.variable_cost.iter().all(|&x| cfg.variable_cost.contains(x)));
    check("computeCap", inst.compute_cap.iter().all(|c| cfg.capacity_menu.contains(c)));
    check("storageCap", inst.storage_cap.iter().all(|c| cfg.storage_menu.contains(c)));
    check("delayCloud", inst.delay_cloud.iter().all(|&d| d == cfg.cloud_delay));
    check("cloudPrice", inst.cloud_price == cfg.cloud_price);
    check("priceGrid", inst.price_grid.iter().all(|g| *g == cfg.price_grid));
    check("placementCost", inst.placement_cost.iter().flatten().all(|&x| x == cfg.placement_cost));
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_nodes_rate_two_has_197_edges() {
        let topo = generate_topology(&ScenarioConfig::default()).unwrap();
        assert_eq!(topo.edges.len(), 3 + 2 * 97);
        assert!(topo.edges.iter().all(|&(u, v, _)| u < v));
    }

    #[test]
    fn same_seed_same_topology() {
        let cfg = ScenarioConfig { seed: 42, ..Default::default() };
        assert_eq!(generate_topology(&cfg).unwrap(), generate_topology(&cfg).unwrap());
    }

    #[test]
    fn colocated_nodes_have_zero_delay() {
        let topo = generate_topology(&ScenarioConfig::default()).unwrap();
        assert_eq!(shortest_path_delays(&topo, &[7], &[7]).unwrap(), vec![vec![0.0]]);
    }

    #[test]
    fn two_link_path() {
        let topo = Topology { nodes: 3, edges: vec![(0, 1, 2.0), (1, 2, 3.0)] };
        assert_eq!(shortest_path_delays(&topo, &[0], &[2]).unwrap(), vec![vec![5.0]]);
    }

    #[test]
    fn disconnected_pair_is_an_error() {
        let topo = Topology { nodes: 3, edges: vec![(0, 1, 2.0)] };
        assert!(shortest_path_delays(&topo, &[0], &[2]).is_err());
    }

    #[test]
    fn base_config_shape() {
        let inst = sample_instance(&ScenarioConfig { seed: 3, ..Default::default() }).unwrap();
        assert_eq!((inst.m, inst.n, inst.k, inst.v), (10, 4, 6, 5));
        assert_eq!(inst.cloud_price, 0.01);
        assert_eq!(inst.provenance.as_ref().unwrap().seed, 3);
    }

    #[test]
    fn same_seed_same_json() {
        let cfg = ScenarioConfig { seed: 11, ..Default::default() };
        assert_eq!(sample_instance(&cfg).unwrap().to_json(), sample_instance(&cfg).unwrap().to_json());
    }

    #[test]
    fn too_many_nodes_requested() {
        let cfg = ScenarioConfig { nodes: 10, m: 8, n: 4, ..Default::default() };
        assert!(sample_instance(&cfg).is_err());
        let colo = ScenarioConfig { allow_colocation: true, ..cfg };
        assert!(sample_instance(&colo).is_ok());
    }

    #[test]
    fn hash_ignores_seed_but_not_ranges() {
        let a = ScenarioConfig { seed: 1, ..Default::default() };
        let b = ScenarioConfig { seed: 2, ..Default::default() };
        let c = ScenarioConfig { budget: Range::new(100.0, 300.0), ..Default::default() };
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
