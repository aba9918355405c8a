mod common;

use edgeprice_core::model::{scale_instance, ScalingFactors};
use edgeprice_core::price_grid::{binary_expansion_bits, discretize_range, level_from_bits};
use edgeprice_core::scenario::{generate_topology, shortest_path_delays, ScenarioConfig, Topology};
use proptest::prelude::*;

fn factor() -> impl Strategy<Value = f64> {
    0.25f64..4.0
}

fn factors() -> impl Strategy<Value = ScalingFactors> {
    (factor(), factor(), factor(), factor()).prop_map(|(demand, penalty, capacity, cloud_price)| ScalingFactors {
        demand,
        penalty,
        capacity,
        cloud_price,
    })
}

fn floyd_warshall(topo: &Topology) -> Vec<Vec<f64>> {
    let n = topo.nodes;
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in &topo.edges {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for via in 0..n {
        for a in 0..n {
            for b in 0..n {
                let alt = d[a][via] + d[via][b];
                if alt < d[a][b] {
                    d[a][b] = alt;
                }
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_composes_multiplicatively(seed in 0u64..500, f in factors(), g in factors()) {
        let inst = common::tiny(seed);
        let twice = scale_instance(&scale_instance(&inst, &f).unwrap(), &g).unwrap();
        let product = ScalingFactors {
            demand: f.demand * g.demand,
            penalty: f.penalty * g.penalty,
            capacity: f.capacity * g.capacity,
            cloud_price: f.cloud_price * g.cloud_price,
        };
        let once = scale_instance(&inst, &product).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        prop_assert!(twice.demand.iter().flatten().zip(once.demand.iter().flatten()).all(|(&a, &b)| close(a, b)));
        prop_assert!(twice.delay_weight.iter().zip(&once.delay_weight).all(|(&a, &b)| close(a, b)));
        prop_assert!(twice.compute_cap.iter().zip(&once.compute_cap).all(|(&a, &b)| close(a, b)));
        prop_assert!(close(twice.cloud_price, once.cloud_price));
        prop_assert_eq!(&twice.price_grid, &inst.price_grid);
    }

    #[test]
    fn edge_delays_obey_the_triangle_inequality(seed in 0u64..1000) {
        let cfg = ScenarioConfig { nodes: 40, ..ScenarioConfig::sized(seed, 6, 4, 1) };
        let topo = generate_topology(&cfg).unwrap();
        let aps: Vec<usize> = (0..6).map(|i| (i * 7 + seed as usize) % 40).collect();
        let ens: Vec<usize> = (0..4).map(|j| (j * 11 + 3 + seed as usize) % 40).collect();
        let ap_en = shortest_path_delays(&topo, &aps, &ens).unwrap();
        let en_en = shortest_path_delays(&topo, &ens, &ens).unwrap();
        for row in &ap_en {
            for j in 0..ens.len() {
                for via in 0..ens.len() {
                    prop_assert!(row[j] <= row[via] + en_en[via][j] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn shortest_paths_match_floyd_warshall(
        edges in proptest::collection::vec((0usize..6, 0usize..6, 1.0f64..10.0), 5..15)
    ) {
        let mut edges: Vec<(usize, usize, f64)> =
            edges.into_iter().filter(|(u, v, _)| u != v).map(|(u, v, w)| (u.min(v), u.max(v), w)).collect();
        // A spanning path keeps the graph connected.
        edges.extend((0..5).map(|u| (u, u + 1, 25.0)));
        let topo = Topology { nodes: 6, edges };
        let all: Vec<usize> = (0..6).collect();
        let got = shortest_path_delays(&topo, &all, &all).unwrap();
        let want = floyd_warshall(&topo);
        for a in 0..6 {
            for b in 0..6 {
                prop_assert!((got[a][b] - want[a][b]).abs() <= 1e-9, "{a}->{b}: {} vs {}", got[a][b], want[a][b]);
            }
        }
    }

    #[test]
    fn binary_expansion_round_trips(bits in 1u32..10, raw in 0usize..1024) {
        let level = raw % (1usize << bits);
        let b = binary_expansion_bits(level, bits).unwrap();
        prop_assert_eq!(b.len(), bits as usize + 1);
        prop_assert_eq!(level_from_bits(&b).unwrap(), level);
    }

    #[test]
    fn discretized_range_is_evenly_spaced_from_the_floor(lo in 0.001f64..1.0, width in 0.001f64..1.0, bits in 1u32..8) {
        let g = discretize_range(lo, lo + width, bits).unwrap();
        prop_assert_eq!(g.levels.len(), 1usize << bits);
        prop_assert!(g.levels.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((g.levels[0] - lo).abs() <= 1e-12);
        prop_assert!((g.levels[g.levels.len() - 1] + g.delta - (lo + width)).abs() <= 1e-12);
    }
}
