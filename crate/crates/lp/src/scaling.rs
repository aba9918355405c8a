use crate::model::LinearModel;

/// Power-of-two row and column factors. A scaled coefficient is
/// `row[i] * a_ij * col[j]`; scaled variable `x'_j = x_j / col[j]`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

fn pow2_near(v: f64) -> f64 {
    if v <= 0.0 || !v.is_finite() {
        1.0
    } else {
        2f64.powi(v.log2().round() as i32)
    }
}

impl Scaling {
    pub(crate) fn identity(model: &LinearModel) -> Self {
        Self { row: vec![1.0; model.num_rows()], col: vec![1.0; model.num_vars()] }
    }

    /// Alternating geometric-mean passes followed by a max-magnitude pass,
    /// all rounded to powers of two so scaling is exact in floating point.
    pub(crate) fn equilibrate(model: &LinearModel) -> Self {
        let mut s = Self::identity(model);
        let n = model.num_vars();
        for _ in 0..4 {
            let mut cmin = vec![f64::INFINITY; n];
            let mut cmax = vec![0.0f64; n];
            for (i, row) in model.rows.iter().enumerate() {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for &(v, a) in &row.coeffs {
                    let m = (a * s.col[v.0]).abs();
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
                if hi > 0.0 {
                    s.row[i] = pow2_near(1.0 / (lo * hi).sqrt());
                }
            }
            for (i, row) in model.rows.iter().enumerate() {
                for &(v, a) in &row.coeffs {
                    let m = (a * s.row[i]).abs();
                    cmin[v.0] = cmin[v.0].min(m);
                    cmax[v.0] = cmax[v.0].max(m);
                }
            }
            for j in 0..n {
                if cmax[j] > 0.0 {
                    s.col[j] = pow2_near(1.0 / (cmin[j] * cmax[j]).sqrt());
                }
            }
        }
        for (i, row) in model.rows.iter().enumerate() {
            let hi = row.coeffs.iter().map(|&(v, a)| (a * s.col[v.0]).abs()).fold(0.0, f64::max);
            if hi > 0.0 {
                s.row[i] = pow2_near(1.0 / hi);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjSense, RowSense};

    #[test]
    fn factors_are_powers_of_two_and_bring_rows_near_unit() {
        let mut m = LinearModel::new("s", ObjSense::Minimize);
        let x = m.add_nonneg("x");
        let y = m.add_nonneg("y");
        m.add_row("a", [(x, 1000.0), (y, 0.001)], RowSense::Le, 1.0);
        m.add_row("b", [(x, 3.0), (y, 5.0)], RowSense::Ge, 1.0);
        let s = Scaling::equilibrate(&m);
        for f in s.row.iter().chain(&s.col) {
            assert_eq!(f.log2().fract(), 0.0);
        }
        for (i, r) in m.rows.iter().enumerate() {
            let hi = r.coeffs.iter().map(|&(v, a)| (a * s.row[i] * s.col[v.0]).abs()).fold(0.0, f64::max);
            assert!(hi > 0.5 && hi <= 1.5, "row {i}: {hi}");
        }
    }
}
