mod common;

use common::random_model;
use edgeprice_lp::{
    export_mps, import_solution, parse_mps, solve_lp, solve_milp, write_solution, MilpConfig, ObjSense, Status,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fixing_all_binaries_reduces_milp_to_lp(seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = random_model(&mut rng, 5, 2, 4);
        let bins: Vec<_> = m.binaries().collect();
        for (i, v) in bins.into_iter().enumerate() {
            m.fix(v, ((mask >> i) & 1) as f64);
        }
        let lp = solve_lp(&m).unwrap();
        let milp = solve_milp(&m, &MilpConfig { gap_tol: 0.0, ..Default::default() }).unwrap();
        prop_assert_eq!(lp.status == Status::Optimal, milp.status == Status::Optimal);
        if lp.status == Status::Optimal {
            prop_assert!((lp.objective - milp.objective).abs() <= 1e-9 * (1.0 + lp.objective.abs()));
        }
    }

    #[test]
    fn relaxation_bounds_the_integer_optimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 6, 2, 4);
        let lp = solve_lp(&m).unwrap();
        let milp = solve_milp(&m, &MilpConfig { gap_tol: 0.0, ..Default::default() }).unwrap();
        if milp.status == Status::Optimal {
            let slack = 1e-9 * (1.0 + lp.objective.abs());
            match m.sense {
                ObjSense::Maximize => {
                    prop_assert!(lp.objective >= milp.objective - slack);
                    prop_assert!(milp.best_bound >= milp.objective - slack);
                }
                ObjSense::Minimize => {
                    prop_assert!(lp.objective <= milp.objective + slack);
                    prop_assert!(milp.best_bound <= milp.objective + slack);
                }
            }
            prop_assert!(m.max_violation(&milp.values).within(1e-6));
            prop_assert!(m.integral(&milp.values, 1e-6));
        }
    }

    #[test]
    fn mps_round_trip_preserves_optimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 3, 2, 3);
        let back = parse_mps(&export_mps(&m)).unwrap();
        prop_assert_eq!(back.num_vars(), m.num_vars());
        prop_assert_eq!(back.num_rows(), m.num_rows());
        prop_assert_eq!(back.num_binaries(), m.num_binaries());
        let a = solve_milp(&m, &MilpConfig { gap_tol: 0.0, ..Default::default() }).unwrap();
        let b = solve_milp(&back, &MilpConfig { gap_tol: 0.0, ..Default::default() }).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == Status::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
            let imp = import_solution(&m, &write_solution(&m, &a.values)).unwrap();
            prop_assert!(imp.feasible);
            prop_assert!((imp.solution.objective - a.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
        }
    }
}

#[test]
fn one_variable_model_round_trips_exactly() {
    let mut m = edgeprice_lp::LinearModel::new("one", ObjSense::Maximize);
    let x = m.add_continuous("x", 0.0, 0.1 + 0.2);
    m.add_row("c", [(x, 1.0 / 3.0)], edgeprice_lp::RowSense::Le, 0.7);
    m.set_objective([(x, std::f64::consts::PI)], 0.0);
    let back = parse_mps(&export_mps(&m)).unwrap();
    assert_eq!(back.vars[0].upper, m.vars[0].upper);
    assert_eq!(back.rows[0].coeffs[0].1, m.rows[0].coeffs[0].1);
    let s = solve_lp(&m).unwrap();
    let imp = import_solution(&m, &write_solution(&m, &s.values)).unwrap();
    assert_eq!(imp.solution.values, s.values);
}
