#![allow(dead_code)]

use edgeprice_core::model::Instance;
use edgeprice_core::scenario::{sample_instance, ScenarioConfig};

/// Three-level grid whose mean is a grid point, so every scheme applies.
pub const TINY_GRID: [f64; 3] = [0.01, 0.02, 0.03];

/// Scenario with M ≤ 3, N ≤ 2, K ≤ 2 and V = 3 on a 20-node topology.
pub fn tiny_config(seed: u64) -> ScenarioConfig {
    let m = 1 + (seed % 3) as usize;
    let n = 1 + ((seed / 3) % 2) as usize;
    let k = 1 + ((seed / 6) % 2) as usize;
    ScenarioConfig { nodes: 20, price_grid: TINY_GRID.to_vec(), ..ScenarioConfig::sized(seed, m, n, k) }
}

pub fn tiny(seed: u64) -> Instance {
    sample_instance(&tiny_config(seed)).expect("tiny scenario samples")
}

/// Single-EN scenario whose storage fits every service at once.
pub fn single_en(seed: u64) -> Instance {
    let m = 2 + (seed % 3) as usize;
    let k = 2 + ((seed / 3) % 2) as usize;
    let cfg = ScenarioConfig { nodes: 30, ..ScenarioConfig::sized(seed, m, 1, k) };
    let mut inst = sample_instance(&cfg).expect("single-EN scenario samples");
    inst.storage_cap[0] = inst.service_size.iter().sum::<f64>();
    inst
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}
