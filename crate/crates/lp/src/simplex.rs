//! Dense bounded-variable simplex on an equilibrated copy of a model.
//!
//! Every row `i` gets a logical variable `s_i` so that the system reads
//! `A' x' + s = 0` with `s_i = -activity'_i` and row bounds moved onto `s_i`.
//! The tableau stores `B^-1 [A' | I]` densely; reduced costs are carried as an
//! extra row updated on each pivot. Nonbasic variables sit at a finite bound,
//! or at zero when free.

use std::time::Instant;

use crate::model::{LinearModel, ObjSense, RowSense};
use crate::scaling::Scaling;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
/// Residual infeasibility accepted when phase one has no improving column left.
const LOOSE_PRIMAL_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable held at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

pub(crate) struct Simplex {
    m: usize,
    n: usize,
    ncols: usize,
    /// Scaled constraint rows (structural part only), kept for reinversion.
    rows: Vec<Vec<(usize, f64)>>,
    tab: Vec<f64>,
    basis: Vec<usize>,
    place: Vec<Place>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    scaling: Scaling,
    since_refactor: usize,
    pub(crate) iterations: usize,
    pub(crate) deadline: Option<Instant>,
    bland: bool,
    degenerate_run: usize,
    scratch: Vec<usize>,
}

impl Simplex {
    /// Builds the slack-basis tableau. Binary markers are ignored; only bounds matter.
    pub(crate) fn new(model: &LinearModel) -> Self {
        let m = model.num_rows();
        let n = model.num_vars();
        let ncols = n + m;
        let scaling = Scaling::equilibrate(model);
        let sign = match model.sense {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };

        let mut rows = Vec::with_capacity(m);
        for (i, row) in model.rows.iter().enumerate() {
            let rs = scaling.row[i];
            rows.push(row.coeffs.iter().map(|&(v, a)| (v.0, a * rs * scaling.col[v.0])).collect::<Vec<_>>());
        }

        let mut lo = vec![0.0; ncols];
        let mut up = vec![0.0; ncols];
        let mut cost = vec![0.0; ncols];
        for (j, v) in model.vars.iter().enumerate() {
            lo[j] = v.lower / scaling.col[j];
            up[j] = v.upper / scaling.col[j];
        }
        for &(v, c) in &model.objective {
            cost[v.0] += sign * c * scaling.col[v.0];
        }
        for (i, row) in model.rows.iter().enumerate() {
            let b = row.rhs * scaling.row[i];
            let (l, u) = match row.sense {
                RowSense::Le => (-b, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, -b),
                RowSense::Eq => (-b, -b),
            };
            lo[n + i] = l;
            up[n + i] = u;
        }

        let mut tab = vec![0.0; m * ncols];
        for (i, row) in rows.iter().enumerate() {
            let base = i * ncols;
            for &(j, a) in row {
                tab[base + j] = a;
            }
            tab[base + n + i] = 1.0;
        }

        let mut place = vec![Place::Lower; ncols];
        let mut x = vec![0.0; ncols];
        for j in 0..n {
            let (p, val) = initial_place(lo[j], up[j], cost[j]);
            place[j] = p;
            x[j] = val;
        }
        let basis: Vec<usize> = (n..ncols).collect();
        for i in 0..m {
            place[n + i] = Place::Basic;
        }

        let mut s = Self {
            m,
            n,
            ncols,
            rows,
            tab,
            basis,
            place,
            lo,
            up,
            x,
            d: cost.clone(),
            cost,
            scaling,
            since_refactor: 0,
            iterations: 0,
            deadline: None,
            bland: false,
            degenerate_run: 0,
            scratch: Vec::with_capacity(ncols),
        };
        s.recompute_basic_values();
        s
    }

    #[inline]
    fn t(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.ncols + j]
    }

    fn recompute_basic_values(&mut self) {
        for i in 0..self.m {
            let base = i * self.ncols;
            let mut acc = 0.0;
            for j in 0..self.ncols {
                if self.place[j] != Place::Basic {
                    let xj = self.x[j];
                    if xj != 0.0 {
                        acc -= self.tab[base + j] * xj;
                    }
                }
            }
            let b = self.basis[i];
            self.x[b] = acc;
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let base = i * self.ncols;
            for j in 0..self.ncols {
                self.d[j] -= cb * self.tab[base + j];
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Gauss-Jordan pivot making column `q` basic in row `r`.
    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.tab[r * nc + q];
        let inv = 1.0 / piv;
        self.scratch.clear();
        {
            let row = &mut self.tab[r * nc..(r + 1) * nc];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.scratch.push(j);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        let nz = &self.scratch;
        let update = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &j in nz {
                    let v = row[j] - f * prow[j];
                    row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                row[q] = 0.0;
            }
        };
        for row in before.chunks_exact_mut(nc) {
            update(row);
        }
        for row in after.chunks_exact_mut(nc) {
            update(row);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in nz {
                self.d[j] -= f * prow[j];
            }
        }
        self.d[q] = 0.0;

        let leaving = self.basis[r];
        self.basis[r] = q;
        self.place[q] = Place::Basic;
        // Caller fixes the leaving variable's place and value.
        self.place[leaving] = Place::Lower;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    /// Rebuilds `B^-1 [A' | I]` from the stored rows for the current basis.
    pub(crate) fn reinvert(&mut self) {
        let nc = self.ncols;
        let m = self.m;
        let n = self.n;
        let mut tab = vec![0.0; m * nc];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                tab[i * nc + j] = a;
            }
            tab[i * nc + n + i] = 1.0;
        }
        let old_basis = std::mem::take(&mut self.basis);
        let mut assigned = vec![usize::MAX; m];
        let mut row_free = vec![true; m];
        let mut rejected = Vec::new();
        let mut nz = Vec::with_capacity(nc);

        let eliminate = |tab: &mut Vec<f64>, r: usize, q: usize, nz: &mut Vec<usize>| {
            let inv = 1.0 / tab[r * nc + q];
            nz.clear();
            for j in 0..nc {
                let v = tab[r * nc + j];
                if v != 0.0 {
                    let w = v * inv;
                    tab[r * nc + j] = if w.abs() < DROP_TOL { 0.0 } else { w };
                    if tab[r * nc + j] != 0.0 {
                        nz.push(j);
                    }
                }
            }
            tab[r * nc + q] = 1.0;
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = tab[i * nc + q];
                if f == 0.0 {
                    continue;
                }
                for &j in nz.iter() {
                    let v = tab[i * nc + j] - f * tab[r * nc + j];
                    tab[i * nc + j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                tab[i * nc + q] = 0.0;
            }
        };

        // Structural columns first; logicals are cheap and fill the rest.
        let mut order: Vec<usize> = old_basis.clone();
        order.sort_by_key(|&b| (b >= n, b));
        for &b in &order {
            let mut best = 0.0;
            let mut best_row = usize::MAX;
            for i in 0..m {
                if row_free[i] {
                    let v = tab[i * nc + b].abs();
                    if v > best {
                        best = v;
                        best_row = i;
                    }
                }
            }
            if best < 1e-10 {
                rejected.push(b);
                continue;
            }
            eliminate(&mut tab, best_row, b, &mut nz);
            row_free[best_row] = false;
            assigned[best_row] = b;
        }
        // Repair: any row left without a basic variable takes a logical column.
        for i in 0..m {
            if !row_free[i] {
                continue;
            }
            let mut best = 0.0;
            let mut best_col = usize::MAX;
            for j in n..nc {
                if self.place[j] == Place::Basic && assigned.contains(&j) {
                    continue;
                }
                if assigned.contains(&j) {
                    continue;
                }
                let v = tab[i * nc + j].abs();
                if v > best {
                    best = v;
                    best_col = j;
                }
            }
            debug_assert!(best_col != usize::MAX);
            eliminate(&mut tab, i, best_col, &mut nz);
            row_free[i] = false;
            assigned[i] = best_col;
            self.place[best_col] = Place::Basic;
        }
        for b in rejected {
            let (p, v) = resting_place(self.lo[b], self.up[b], self.x[b]);
            self.place[b] = p;
            self.x[b] = v;
        }
        self.tab = tab;
        self.basis = assigned;
        for &b in &self.basis {
            self.place[b] = Place::Basic;
        }
        self.since_refactor = 0;
        self.recompute_basic_values();
        self.recompute_reduced_costs();
    }

    fn maybe_reinvert(&mut self) {
        let interval = 100 + self.m;
        if self.since_refactor >= interval {
            self.reinvert();
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] {
            self.lo[j] - v
        } else if v > self.up[j] {
            v - self.up[j]
        } else {
            0.0
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&b| self.infeasibility(b)).fold(0.0, f64::max)
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        if self.lo[j] == self.up[j] {
            return 0.0;
        }
        match self.place[j] {
            Place::Basic => 0.0,
            Place::Lower => (-self.d[j]).max(0.0),
            Place::Upper => self.d[j].max(0.0),
            Place::Zero => self.d[j].abs(),
        }
    }

    fn max_dual_infeasibility(&self) -> f64 {
        (0..self.ncols).map(|j| self.dual_infeasibility(j)).fold(0.0, f64::max)
    }

    fn out_of_time(&self) -> bool {
        match self.deadline {
            Some(t) => self.iterations % 32 == 0 && Instant::now() >= t,
            None => false,
        }
    }

    fn iteration_cap(&self) -> usize {
        200 * (self.m + self.ncols) + 10_000
    }

    /// Moves nonbasic `j` to `value`, updating basic variables.
    fn shift_nonbasic(&mut self, j: usize, value: f64) {
        let delta = value - self.x[j];
        if delta != 0.0 {
            for i in 0..self.m {
                let a = self.t(i, j);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= a * delta;
                }
            }
        }
        self.x[j] = value;
    }

    /// Sets bounds of structural variable `j` (model units).
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let s = self.scaling.col[j];
        self.lo[j] = lower / s;
        self.up[j] = upper / s;
        if self.place[j] != Place::Basic {
            let (p, v) = dual_feasible_place(self.lo[j], self.up[j], self.d[j]);
            self.place[j] = p;
            self.shift_nonbasic(j, v);
        }
    }

    /// Re-seats every boxed nonbasic variable at the bound its reduced cost prefers.
    fn restore_dual_feasibility_on_boxes(&mut self) -> bool {
        let mut ok = true;
        for j in 0..self.ncols {
            if self.place[j] == Place::Basic || self.dual_infeasibility(j) <= DUAL_TOL {
                continue;
            }
            if self.lo[j].is_finite() && self.up[j].is_finite() {
                let (p, v) = dual_feasible_place(self.lo[j], self.up[j], self.d[j]);
                self.place[j] = p;
                self.shift_nonbasic(j, v);
            } else {
                ok = false;
            }
        }
        ok
    }

    /// Runs whichever simplex variant fits the current basis until optimal.
    pub(crate) fn optimize(&mut self) -> Outcome {
        let start_iters = self.iterations;
        let mut refreshed = false;
        let mut confirmed = false;
        // Set once phase one has accepted a residual below the loose tolerance.
        let mut loose = false;
        let mut passes = 0;
        loop {
            passes += 1;
            if self.iterations - start_iters > self.iteration_cap() || passes > 20 {
                return Outcome::IterationLimit;
            }
            let primal_tol = if loose { LOOSE_PRIMAL_TOL } else { PRIMAL_TOL };
            if self.max_primal_infeasibility() > primal_tol {
                let dual_ok = self.restore_dual_feasibility_on_boxes() && self.max_dual_infeasibility() <= DUAL_TOL;
                let out = if dual_ok { self.dual_simplex() } else { self.phase_one() };
                match out {
                    Outcome::Optimal => {}
                    Outcome::Infeasible => {
                        if !refreshed && self.since_refactor > 0 {
                            refreshed = true;
                            self.reinvert();
                            continue;
                        }
                        if dual_ok && !confirmed {
                            confirmed = true;
                            match self.phase_one() {
                                Outcome::Optimal => {
                                    loose = true;
                                    continue;
                                }
                                other => return other,
                            }
                        }
                        return Outcome::Infeasible;
                    }
                    other => return other,
                }
            }
            match self.primal_phase_two() {
                Outcome::Optimal => {
                    let tol = if passes > 3 || loose { LOOSE_PRIMAL_TOL } else { PRIMAL_TOL * 10.0 };
                    if self.max_primal_infeasibility() > tol {
                        self.reinvert();
                        continue;
                    }
                    if self.since_refactor > 0 && !refreshed {
                        refreshed = true;
                        self.reinvert();
                        if self.max_primal_infeasibility() > primal_tol || self.max_dual_infeasibility() > DUAL_TOL {
                            continue;
                        }
                    }
                    return Outcome::Optimal;
                }
                other => return other,
            }
        }
    }

    fn choose_entering(&self, dvec: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.place[j] == Place::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let dj = dvec[j];
            let dir = match self.place[j] {
                Place::Lower if dj < -DUAL_TOL => 1.0,
                Place::Upper if dj > DUAL_TOL => -1.0,
                Place::Zero if dj.abs() > DUAL_TOL => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal ratio test. `phase_one` lets infeasible basics block only when they
    /// reach the bound they violate. Returns (row, step, leaving bound value) or
    /// `None` for a bound flip / unbounded ray when `row` is absent.
    fn primal_ratio(&self, q: usize, dir: f64, phase_one: bool) -> (Option<(usize, f64)>, f64) {
        let mut limit1 = f64::INFINITY;
        let mut limits: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..self.m {
            let a = self.t(i, q);
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let b = self.basis[i];
            let xb = self.x[b];
            let (bound, exact, relaxed) = if phase_one && xb < self.lo[b] - PRIMAL_TOL {
                if rate > 0.0 {
                    let lim = (self.lo[b] - xb) / rate;
                    (self.lo[b], lim, lim)
                } else {
                    continue;
                }
            } else if phase_one && xb > self.up[b] + PRIMAL_TOL {
                if rate < 0.0 {
                    let lim = (xb - self.up[b]) / -rate;
                    (self.up[b], lim, lim)
                } else {
                    continue;
                }
            } else if rate < 0.0 {
                if self.lo[b] == f64::NEG_INFINITY {
                    continue;
                }
                (self.lo[b], ((xb - self.lo[b]) / -rate).max(0.0), (xb - self.lo[b] + PRIMAL_TOL) / -rate)
            } else {
                if self.up[b] == f64::INFINITY {
                    continue;
                }
                (self.up[b], ((self.up[b] - xb) / rate).max(0.0), (self.up[b] - xb + PRIMAL_TOL) / rate)
            };
            if self.bland {
                limits.push((i, exact, bound));
            } else {
                limit1 = limit1.min(relaxed);
                limits.push((i, exact, bound));
            }
        }
        let own = self.up[q] - self.lo[q];
        if self.bland {
            let min = limits.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
            if own <= min {
                return (None, own);
            }
            let pick = limits.iter().filter(|l| l.1 <= min + 1e-12).min_by_key(|l| self.basis[l.0]).copied();
            return match pick {
                Some((r, step, bound)) => (Some((r, bound)), step),
                None => (None, f64::INFINITY),
            };
        }
        if own <= limit1 {
            return (None, own);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_piv = 0.0;
        for &(i, exact, bound) in &limits {
            if exact <= limit1 {
                let piv = self.t(i, q).abs();
                if piv > best_piv {
                    best_piv = piv;
                    best = Some((i, exact, bound));
                }
            }
        }
        match best {
            Some((r, step, bound)) => (Some((r, bound)), step),
            None => (None, f64::INFINITY),
        }
    }

    fn primal_step(&mut self, q: usize, dir: f64, row: Option<(usize, f64)>, step: f64) {
        let step = step.max(0.0);
        if step < 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > 10 * self.ncols.max(1) {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
        let delta = dir * step;
        if delta != 0.0 {
            for i in 0..self.m {
                let a = self.t(i, q);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= a * delta;
                }
            }
            self.x[q] += delta;
        }
        match row {
            None => {
                // Bound flip.
                if dir > 0.0 {
                    self.place[q] = Place::Upper;
                    self.x[q] = self.up[q];
                } else {
                    self.place[q] = Place::Lower;
                    self.x[q] = self.lo[q];
                }
                self.iterations += 1;
            }
            Some((r, bound)) => {
                let leaving = self.basis[r];
                self.pivot(r, q);
                self.place[leaving] = if bound == self.lo[leaving] { Place::Lower } else { Place::Upper };
                if self.lo[leaving] == f64::NEG_INFINITY && self.up[leaving] == f64::INFINITY {
                    self.place[leaving] = Place::Zero;
                }
                self.x[leaving] = bound;
            }
        }
    }

    fn primal_phase_two(&mut self) -> Outcome {
        self.bland = false;
        self.degenerate_run = 0;
        let start = self.iterations;
        loop {
            if self.out_of_time() {
                return Outcome::TimeLimit;
            }
            if self.iterations - start > self.iteration_cap() {
                return Outcome::IterationLimit;
            }
            self.maybe_reinvert();
            let d = std::mem::take(&mut self.d);
            let choice = self.choose_entering(&d);
            self.d = d;
            let Some((q, dir)) = choice else { return Outcome::Optimal };
            let (row, step) = self.primal_ratio(q, dir, false);
            if row.is_none() && !step.is_finite() {
                return Outcome::Unbounded;
            }
            self.primal_step(q, dir, row, step);
        }
    }

    /// Minimizes the sum of basic bound violations.
    fn phase_one(&mut self) -> Outcome {
        self.bland = false;
        self.degenerate_run = 0;
        let start = self.iterations;
        let mut w = vec![0.0; self.ncols];
        loop {
            if self.out_of_time() {
                return Outcome::TimeLimit;
            }
            if self.iterations - start > self.iteration_cap() {
                return Outcome::IterationLimit;
            }
            self.maybe_reinvert();
            w.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for i in 0..self.m {
                let b = self.basis[i];
                let g = if self.x[b] < self.lo[b] - PRIMAL_TOL {
                    -1.0
                } else if self.x[b] > self.up[b] + PRIMAL_TOL {
                    1.0
                } else {
                    continue;
                };
                any = true;
                let base = i * self.ncols;
                for (j, wj) in w.iter_mut().enumerate() {
                    let a = self.tab[base + j];
                    if a != 0.0 {
                        *wj -= g * a;
                    }
                }
            }
            if !any {
                return Outcome::Optimal;
            }
            for &b in &self.basis {
                w[b] = 0.0;
            }
            let Some((q, dir)) = self.choose_entering(&w) else {
                if self.max_primal_infeasibility() <= LOOSE_PRIMAL_TOL {
                    return Outcome::Optimal;
                }
                return Outcome::Infeasible;
            };
            let (row, step) = self.primal_ratio(q, dir, true);
            if row.is_none() && !step.is_finite() {
                // An improving phase-one ray cannot be unbounded; treat as numerical trouble.
                return Outcome::Infeasible;
            }
            self.primal_step(q, dir, row, step);
        }
    }

    fn dual_simplex(&mut self) -> Outcome {
        self.bland = false;
        self.degenerate_run = 0;
        let start = self.iterations;
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        loop {
            if self.out_of_time() {
                return Outcome::TimeLimit;
            }
            if self.iterations - start > self.iteration_cap() {
                return Outcome::IterationLimit;
            }
            self.maybe_reinvert();
            // Leaving row.
            let mut r = usize::MAX;
            let mut worst = PRIMAL_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let inf = self.infeasibility(b);
                if inf > worst {
                    if self.bland {
                        if r == usize::MAX || b < self.basis[r] {
                            r = i;
                        }
                    } else {
                        worst = inf;
                        r = i;
                    }
                }
            }
            if r == usize::MAX {
                return Outcome::Optimal;
            }
            let b = self.basis[r];
            let (target, up_move) = if self.x[b] < self.lo[b] { (self.lo[b], 1.0) } else { (self.up[b], -1.0) };
            let base = r * self.ncols;
            cands.clear();
            let mut bound1 = f64::INFINITY;
            for j in 0..self.ncols {
                if self.place[j] == Place::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let a = self.tab[base + j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // Moving x_j by dir changes x_b by -a*dir; it must move toward `target`.
                let dir = match self.place[j] {
                    Place::Lower => 1.0,
                    Place::Upper => -1.0,
                    Place::Zero => -(a * up_move).signum(),
                    Place::Basic => unreachable!(),
                };
                if -a * dir * up_move <= 0.0 {
                    continue;
                }
                let dj = self.d[j] * dir; // >= 0 when dual feasible
                let ratio = dj.max(0.0) / a.abs();
                bound1 = bound1.min((dj.max(0.0) + DUAL_TOL) / a.abs());
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return Outcome::Infeasible;
            }
            let q = if self.bland {
                let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                cands.iter().filter(|c| c.1 <= min + 1e-12).map(|c| c.0).min().unwrap()
            } else {
                let mut best = cands[0].0;
                let mut best_piv = -1.0;
                for &(j, ratio, piv) in &cands {
                    if ratio <= bound1 && piv > best_piv {
                        best_piv = piv;
                        best = j;
                    }
                }
                best
            };
            let step_ratio = cands.iter().find(|c| c.0 == q).map(|c| c.1).unwrap_or(0.0);
            if step_ratio < 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > 10 * self.ncols.max(1) {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            let a_rq = self.t(r, q);
            let delta_q = -(target - self.x[b]) / a_rq;
            for i in 0..self.m {
                let a = self.t(i, q);
                if a != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= a * delta_q;
                }
            }
            self.x[q] += delta_q;
            self.pivot(r, q);
            self.place[b] = if target == self.lo[b] { Place::Lower } else { Place::Upper };
            self.x[b] = target;
        }
    }

    /// Structural values in model units.
    pub(crate) fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x[j] * self.scaling.col[j]).collect()
    }
}

fn initial_place(lo: f64, up: f64, cost: f64) -> (Place, f64) {
    let lo_ok = lo.is_finite();
    let up_ok = up.is_finite();
    match (lo_ok, up_ok) {
        (true, true) => {
            if cost < 0.0 {
                (Place::Upper, up)
            } else {
                (Place::Lower, lo)
            }
        }
        (true, false) => (Place::Lower, lo),
        (false, true) => (Place::Upper, up),
        (false, false) => (Place::Zero, 0.0),
    }
}

fn dual_feasible_place(lo: f64, up: f64, d: f64) -> (Place, f64) {
    if lo == up {
        return (Place::Lower, lo);
    }
    match (lo.is_finite(), up.is_finite()) {
        (true, true) => {
            if d < 0.0 {
                (Place::Upper, up)
            } else {
                (Place::Lower, lo)
            }
        }
        (true, false) => (Place::Lower, lo),
        (false, true) => (Place::Upper, up),
        (false, false) => (Place::Zero, 0.0),
    }
}

fn resting_place(lo: f64, up: f64, x: f64) -> (Place, f64) {
    match (lo.is_finite(), up.is_finite()) {
        (true, true) => {
            if (x - lo).abs() <= (up - x).abs() {
                (Place::Lower, lo)
            } else {
                (Place::Upper, up)
            }
        }
        (true, false) => (Place::Lower, lo),
        (false, true) => (Place::Upper, up),
        (false, false) => (Place::Zero, 0.0),
    }
}
