#![allow(dead_code)]

use edgeprice_lp::{LinearModel, ObjSense, RowSense, VarKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Best objective over the vertices of the continuous polytope, with binaries
/// fixed at the values given in `fixed`. `None` when no vertex is feasible.
pub fn vertex_optimum(model: &LinearModel, fixed: &[(usize, f64)]) -> Option<f64> {
    let n = model.num_vars();
    let mut fix = vec![None; n];
    for &(j, v) in fixed {
        fix[j] = Some(v);
    }
    let free: Vec<usize> = (0..n).filter(|&j| fix[j].is_none()).collect();
    let k = free.len();

    // Each candidate face: coefficient row over free vars, rhs, plus equality flag.
    let mut faces: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for row in &model.rows {
        let mut a = vec![0.0; k];
        let mut b = row.rhs;
        for &(v, c) in &row.coeffs {
            match fix[v.0] {
                Some(x) => b -= c * x,
                None => a[free.iter().position(|&f| f == v.0).unwrap()] += c,
            }
        }
        // Rows with every variable fixed are settled by the final feasibility check.
        if a.iter().any(|&c| c != 0.0) {
            faces.push((a, b, row.sense == RowSense::Eq));
        }
    }
    for (p, &j) in free.iter().enumerate() {
        let var = &model.vars[j];
        for bound in [var.lower, var.upper] {
            if bound.is_finite() {
                let mut a = vec![0.0; k];
                a[p] = 1.0;
                faces.push((a, bound, false));
            }
        }
    }
    let eqs: Vec<usize> = (0..faces.len()).filter(|&i| faces[i].2).collect();
    let ineqs: Vec<usize> = (0..faces.len()).filter(|&i| !faces[i].2).collect();
    if eqs.len() > k {
        return None;
    }
    let mut best: Option<f64> = None;
    let need = k - eqs.len();
    let mut combo: Vec<usize> = (0..need).collect();
    loop {
        if need <= ineqs.len() {
            let mut rows: Vec<(Vec<f64>, f64)> = eqs.iter().map(|&i| (faces[i].0.clone(), faces[i].1)).collect();
            rows.extend(combo.iter().map(|&c| (faces[ineqs[c]].0.clone(), faces[ineqs[c]].1)));
            if let Some(xf) = solve_square(rows) {
                let mut x = vec![0.0; n];
                for (p, &j) in free.iter().enumerate() {
                    x[j] = xf[p];
                }
                for j in 0..n {
                    if let Some(v) = fix[j] {
                        x[j] = v;
                    }
                }
                if model.max_violation(&x).within(1e-7) {
                    let obj = model.evaluate_objective(&x);
                    best = Some(match (best, model.sense) {
                        (None, _) => obj,
                        (Some(b), ObjSense::Maximize) => b.max(obj),
                        (Some(b), ObjSense::Minimize) => b.min(obj),
                    });
                }
            }
        } else {
            break;
        }
        // next combination
        let mut i = need;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] < ineqs.len() - need + i {
                combo[i] += 1;
                for t in i + 1..need {
                    combo[t] = combo[t - 1] + 1;
                }
                break;
            }
        }
        if need == 0 {
            return best;
        }
    }
    best
}

fn solve_square(mut rows: Vec<(Vec<f64>, f64)>) -> Option<Vec<f64>> {
    let k = rows.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))?;
        if rows[piv].0[col].abs() < 1e-10 {
            return None;
        }
        rows.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = rows[r].0[col] / rows[col].0[col];
                if f != 0.0 {
                    for c in 0..k {
                        rows[r].0[c] -= f * rows[col].0[c];
                    }
                    rows[r].1 -= f * rows[col].1;
                }
            }
        }
    }
    Some((0..k).map(|i| rows[i].1 / rows[i].0[i]).collect())
}

/// Exhaustive 2^b enumeration of the binaries with a vertex search for the rest.
pub fn enumerate_milp(model: &LinearModel) -> Option<f64> {
    let bins: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let fixed: Vec<(usize, f64)> = bins.iter().enumerate().map(|(i, &j)| (j, ((mask >> i) & 1) as f64)).collect();
        if let Some(v) = vertex_optimum(model, &fixed) {
            best = Some(match (best, model.sense) {
                (None, _) => v,
                (Some(b), ObjSense::Maximize) => b.max(v),
                (Some(b), ObjSense::Minimize) => b.min(v),
            });
        }
    }
    best
}

/// Random bounded model around a known interior point, so it is always feasible.
pub fn random_model(rng: &mut ChaCha8Rng, binaries: usize, continuous: usize, rows: usize) -> LinearModel {
    let sense = if rng.gen_bool(0.5) { ObjSense::Maximize } else { ObjSense::Minimize };
    let mut m = LinearModel::new("rand", sense);
    let mut anchor = Vec::new();
    for i in 0..binaries {
        m.add_binary(format!("b{i}"));
        anchor.push(if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
    }
    for i in 0..continuous {
        let up = rng.gen_range(2.0..10.0);
        let lo = if rng.gen_bool(0.3) { -rng.gen_range(0.5..3.0) } else { 0.0 };
        m.add_continuous(format!("x{i}"), lo, up);
        anchor.push(rng.gen_range(lo..up));
    }
    let ids: Vec<_> = (0..m.num_vars()).map(edgeprice_lp::VarId).collect();
    for r in 0..rows {
        let mut coeffs = Vec::new();
        for &v in &ids {
            if rng.gen_bool(0.7) {
                coeffs.push((v, (rng.gen_range(-6i32..=6) as f64) * 0.5));
            }
        }
        let act: f64 = coeffs.iter().map(|&(v, a)| a * anchor[v.0]).sum();
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 => (RowSense::Ge, act - rng.gen_range(0.0..2.0)),
            1 if continuous > 0 && r == 0 => (RowSense::Eq, act),
            _ => (RowSense::Le, act + rng.gen_range(0.0..2.0)),
        };
        m.add_row(format!("r{r}"), coeffs, sense, rhs);
    }
    let obj: Vec<_> = ids.iter().map(|&v| (v, rng.gen_range(-5.0..5.0))).collect();
    m.set_objective(obj, rng.gen_range(-1.0..1.0));
    for v in &m.vars {
        assert!(v.kind == VarKind::Continuous || (v.lower, v.upper) == (0.0, 1.0));
    }
    m
}
