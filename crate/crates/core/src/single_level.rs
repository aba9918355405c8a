//! Pieces shared by both single-level reformulations: leader variables and
//! constraints, follower primal blocks, price products and revenue rows.

use std::time::{Duration, Instant};

use edgeprice_lp::{LinearModel, MilpSolution, ObjSense, RowSense, VarId, VarKind};

use crate::error::{CoreError, Result};
use crate::follower::{add_follower_primal, DualLayout, FollowerContext, FollowerFamily, FollowerLayout};
use crate::model::{follower_cost, leader_profit, tol, DualSolution, FollowerSolution, Instance, LeaderDecision};
use crate::reform_kkt::{derive_bigm, validate_bigm, BigMReport, BigMSet};

/// Variable map of a single-level model.
#[derive(Debug, Clone)]
pub struct SingleLevelLayout {
    /// `r[j][v]`, one-hot price selection.
    pub r: Vec<Vec<VarId>>,
    pub z: Vec<VarId>,
    /// `t[j][k]`.
    pub t: Vec<Vec<VarId>>,
    pub followers: Vec<FollowerLayout>,
    pub duals: Vec<DualLayout>,
    /// `pi[k][j][v]` = r·μ2.
    pub pi: Vec<Vec<Vec<VarId>>>,
    /// `omega[k][j][v]` = r·y.
    pub omega: Vec<Vec<Vec<VarId>>>,
    /// `g[k][j]` = t·Γ.
    pub g: Vec<Vec<VarId>>,
    pub rev: Vec<VarId>,
    /// Storage sign of σ relative to the follower dual LP convention.
    pub sigma_sign: f64,
}

pub(crate) struct Builder<'a> {
    pub inst: &'a Instance,
    pub lp: LinearModel,
    pub lay: SingleLevelLayout,
}

pub(crate) fn tag(k: usize) -> String {
    format!("_{k}")
}

impl<'a> Builder<'a> {
    pub fn new(inst: &'a Instance, name: &str, sigma_sign: f64) -> Self {
        let mut lp = LinearModel::new(name, ObjSense::Maximize);
        let (n, kk, v) = (inst.n, inst.k, inst.v);
        let r = (0..n).map(|j| (0..v).map(|l| lp.add_binary(format!("r[{j}][{l}]"))).collect()).collect();
        let z = (0..n).map(|j| lp.add_binary(format!("z[{j}]"))).collect();
        let t = (0..n).map(|j| (0..kk).map(|k| lp.add_binary(format!("t[{j}][{k}]"))).collect()).collect();
        let lay = SingleLevelLayout {
            r,
            z,
            t,
            followers: Vec::new(),
            duals: Vec::new(),
            pi: Vec::new(),
            omega: Vec::new(),
            g: Vec::new(),
            rev: Vec::new(),
            sigma_sign,
        };
        Self { inst, lp, lay }
    }

    /// Placement needs activation, storage and one price per EN.
    pub fn leader_rows(&mut self) {
        let inst = self.inst;
        for j in 0..inst.n {
            for k in 0..inst.k {
                self.lp.add_row(
                    format!("t_le_z[{j}][{k}]"),
                    [(self.lay.t[j][k], 1.0), (self.lay.z[j], -1.0)],
                    RowSense::Le,
                    0.0,
                );
            }
            let mut c: Vec<_> = (0..inst.k).map(|k| (self.lay.t[j][k], inst.service_size[k])).collect();
            c.push((self.lay.z[j], -inst.storage_cap[j]));
            self.lp.add_row(format!("storage[{j}]"), c, RowSense::Le, 0.0);
            self.lp.add_row(
                format!("onehot[{j}]"),
                self.lay.r[j].iter().map(|&x| (x, 1.0)).collect::<Vec<_>>(),
                RowSense::Eq,
                1.0,
            );
        }
    }

    /// Joint capacity across services; call after all follower blocks exist.
    pub fn capacity_rows(&mut self) {
        let inst = self.inst;
        for j in 0..inst.n {
            let mut c: Vec<_> = self.lay.followers.iter().map(|f| (f.y_edge[j], 1.0)).collect();
            c.push((self.lay.z[j], -inst.compute_cap[j]));
            self.lp.add_row(format!("encap[{j}]"), c, RowSense::Le, 0.0);
        }
    }

    /// Follower primal block for service `k` with placement and price as variables.
    pub fn follower_block(&mut self, k: usize) {
        let inst = self.inst;
        let tg = tag(k);
        let ctx = FollowerContext::new(inst, k, vec![0.0; inst.n], vec![true; inst.n]);
        let start = self.lp.num_rows();
        let fl = add_follower_primal(&mut self.lp, &ctx, &tg);
        let omega: Vec<Vec<VarId>> = (0..inst.n)
            .map(|j| (0..inst.v).map(|l| self.lp.add_nonneg(format!("omega[{j}][{l}]{tg}"))).collect())
            .collect();
        let mut cap_j = 0;
        for (idx, fam) in fl.row_family.iter().enumerate() {
            let row = &mut self.lp.rows[start + idx];
            match fam {
                FollowerFamily::EdgeCapacity => {
                    row.coeffs.push((self.lay.t[cap_j][k], -inst.compute_cap[cap_j]));
                    row.rhs = 0.0;
                    cap_j += 1;
                }
                FollowerFamily::Budget => {
                    row.coeffs.retain(|&(v, _)| v == fl.y_cloud);
                    for j in 0..inst.n {
                        for l in 0..inst.v {
                            row.coeffs.push((omega[j][l], inst.price_grid[j][l]));
                        }
                    }
                }
                _ => {}
            }
        }
        for j in 0..inst.n {
            let c = inst.compute_cap[j];
            for l in 0..inst.v {
                let (w, r, y) = (omega[j][l], self.lay.r[j][l], fl.y_edge[j]);
                self.lp.add_row(format!("om_r[{j}][{l}]{tg}"), [(w, 1.0), (r, -c)], RowSense::Le, 0.0);
                self.lp.add_row(format!("om_y[{j}][{l}]{tg}"), [(w, 1.0), (y, -1.0)], RowSense::Le, 0.0);
                self.lp.add_row(format!("om_lo[{j}][{l}]{tg}"), [(w, 1.0), (y, -1.0), (r, -c)], RowSense::Ge, -c);
            }
            let mut sum: Vec<_> = omega[j].iter().map(|&w| (w, 1.0)).collect();
            sum.push((fl.y_edge[j], -1.0));
            self.lp.add_row(format!("om_sum[{j}]{tg}"), sum, RowSense::Eq, 0.0);
        }
        self.lay.followers.push(fl);
        self.lay.omega.push(omega);
    }

    /// Adds `pi = r·μ2` and `g = t·Γ` linearizations for service `k`.
    pub fn products(&mut self, k: usize, dl: &DualLayout, m_lin: f64) {
        let inst = self.inst;
        let tg = tag(k);
        let pi: Vec<Vec<VarId>> = (0..inst.n)
            .map(|j| (0..inst.v).map(|l| self.lp.add_nonneg(format!("pi[{j}][{l}]{tg}"))).collect())
            .collect();
        let g: Vec<VarId> = (0..inst.n).map(|j| self.lp.add_nonneg(format!("g[{j}]{tg}"))).collect();
        for j in 0..inst.n {
            for l in 0..inst.v {
                self.mccormick(&format!("pi[{j}][{l}]{tg}"), pi[j][l], self.lay.r[j][l], dl.mu2, m_lin);
            }
            self.mccormick(&format!("g[{j}]{tg}"), g[j], self.lay.t[j][k], dl.gamma[j], m_lin);
        }
        self.lay.pi.push(pi);
        self.lay.g.push(g);
    }

    /// `prod = bin·cont` for `0 ≤ cont ≤ big`.
    fn mccormick(&mut self, name: &str, prod: VarId, bin: VarId, cont: VarId, big: f64) {
        self.lp.add_row(format!("{name}_ub"), [(prod, 1.0), (bin, -big)], RowSense::Le, 0.0);
        self.lp.add_row(format!("{name}_le"), [(prod, 1.0), (cont, -1.0)], RowSense::Le, 0.0);
        self.lp.add_row(format!("{name}_lo"), [(prod, 1.0), (cont, -1.0), (bin, -big)], RowSense::Ge, -big);
    }

    /// Revenue definition and the primal-equals-dual identity for service `k`.
    pub fn revenue_rows(&mut self, k: usize, dl: &DualLayout) {
        let inst = self.inst;
        let tg = tag(k);
        let fl = &self.lay.followers[k];
        let rev = self.lp.add_free(format!("Rev{tg}"));
        let mut def = vec![(rev, 1.0)];
        for j in 0..inst.n {
            for l in 0..inst.v {
                def.push((self.lay.omega[k][j][l], -inst.price_grid[j][l]));
            }
        }
        self.lp.add_row(format!("revdef{tg}"), def, RowSense::Eq, 0.0);

        let w = inst.delay_weight[k];
        let mut sd = vec![(rev, 1.0), (fl.y_cloud, inst.cloud_price)];
        for i in 0..inst.m {
            let r = inst.demand[i][k];
            sd.push((fl.x_cloud[i], w * inst.delay_cloud[i]));
            for j in 0..inst.n {
                sd.push((fl.x_edge[i][j], w * inst.delay_edge[i][j]));
                let a = f64::from(inst.eligible[i][j][k]);
                if a != 0.0 {
                    sd.push((dl.eta[i][j], r * a));
                }
            }
            sd.push((dl.xi[i], -r));
            sd.push((dl.tau[i], inst.delay_cap[k]));
        }
        for j in 0..inst.n {
            sd.push((self.lay.g[k][j], inst.compute_cap[j]));
        }
        sd.push((dl.mu2, inst.budget[k]));
        self.lp.add_row(format!("strongdual{tg}"), sd, RowSense::Eq, 0.0);
        self.lay.rev.push(rev);
    }

    /// Profit objective: revenue minus activation, utilization and placement cost.
    pub fn objective(&mut self) {
        let inst = self.inst;
        let mut obj: Vec<(VarId, f64)> = self.lay.rev.iter().map(|&r| (r, 1.0)).collect();
        for j in 0..inst.n {
            obj.push((self.lay.z[j], -inst.fixed_cost[j]));
            for k in 0..inst.k {
                obj.push((self.lay.t[j][k], -inst.placement_cost[j][k]));
                obj.push((self.lay.followers[k].y_edge[j], -inst.variable_cost[j] / inst.compute_cap[j]));
            }
        }
        self.lp.set_objective(obj, 0.0);
    }
}

/// Decisions and follower/dual points recovered from a single-level solution.
#[derive(Debug, Clone)]
pub struct Extracted {
    pub decision: LeaderDecision,
    pub followers: Vec<FollowerSolution>,
    pub duals: Vec<DualSolution>,
    /// Value of each `Rev_k` variable.
    pub revenue: Vec<f64>,
    /// Profit recomputed from the decision and allocations.
    pub profit: f64,
    pub milp_objective: f64,
}

pub(crate) fn extract(
    inst: &Instance,
    model: &LinearModel,
    lay: &SingleLevelLayout,
    sol: &MilpSolution,
) -> Result<Extracted> {
    if !sol.status.has_solution() || sol.values.len() != model.num_vars() {
        return Err(CoreError::NoSolution(sol.status));
    }
    let x = &sol.values;
    for id in model.binaries() {
        let v = x[id.0];
        if (v - v.round()).abs() > tol::INTEGRALITY {
            return Err(CoreError::NumericalIntegrity(format!(
                "binary `{}` has value {v}, not within {} of an integer",
                model.var(id).name,
                tol::INTEGRALITY
            )));
        }
    }
    let on = |id: VarId| x[id.0].round() >= 0.5;
    let mut price_level = Vec::with_capacity(inst.n);
    for j in 0..inst.n {
        let levels: Vec<usize> = (0..inst.v).filter(|&l| on(lay.r[j][l])).collect();
        if levels.len() != 1 {
            return Err(CoreError::NumericalIntegrity(format!("EN {j} selects {} price levels", levels.len())));
        }
        price_level.push(levels[0]);
    }
    let decision = LeaderDecision {
        price: (0..inst.n).map(|j| inst.price_grid[j][price_level[j]]).collect(),
        price_level,
        active: lay.z.iter().map(|&z| on(z)).collect(),
        placed: lay.t.iter().map(|row| row.iter().map(|&t| on(t)).collect()).collect(),
    };
    let mut followers = Vec::with_capacity(inst.k);
    for (k, fl) in lay.followers.iter().enumerate() {
        let mut fs = fl.read(x);
        fs.cost = follower_cost(inst, &decision.price, k, &fs)?;
        followers.push(fs);
    }
    let duals = lay.duals.iter().map(|d| d.read(x, lay.sigma_sign)).collect();
    let profit = leader_profit(inst, &decision, &followers)?;
    let obj = sol.objective;
    if (profit - obj).abs() > tol::PROFIT_RECOMPUTE * (1.0 + obj.abs()) {
        return Err(CoreError::NumericalIntegrity(format!(
            "recomputed profit {profit} disagrees with the MILP objective {obj}"
        )));
    }
    Ok(Extracted {
        decision,
        followers,
        duals,
        revenue: lay.rev.iter().map(|r| x[r.0]).collect(),
        profit,
        milp_objective: obj,
    })
}

/// Re-solves with every binary fixed and the objective pinned, minimizing the
/// sum of sign-constrained multipliers. Degenerate multipliers that sit at an
/// arbitrary value inside their big-M box are pulled to the smallest
/// representative. Falls back to `sol` if the LP does not solve cleanly.
pub(crate) fn minimal_multipliers(model: &LinearModel, lay: &SingleLevelLayout, sol: &MilpSolution) -> MilpSolution {
    if !sol.status.has_solution() || sol.values.is_empty() {
        return sol.clone();
    }
    let mut lp = model.clone();
    for id in model.binaries().collect::<Vec<_>>() {
        lp.fix(id, sol.values[id.0].round());
    }
    let obj = model.evaluate_objective(&sol.values);
    let pin = obj - 1e-9 * (1.0 + obj.abs());
    lp.add_row("objective_pin", model.objective.clone(), RowSense::Ge, pin - model.objective_constant);
    let mut target = Vec::new();
    for d in &lay.duals {
        target.extend(d.tau.iter().chain(&d.lambda).chain(&d.gamma).chain(&d.zeta).copied());
        target.extend(d.eta.iter().flatten().chain(d.eps.iter().flatten()).copied());
        target.push(d.mu1);
        target.push(d.mu2);
    }
    lp.sense = ObjSense::Minimize;
    lp.set_objective(target.into_iter().map(|v| (v, 1.0)), 0.0);
    match edgeprice_lp::solve_lp(&lp) {
        Ok(s) if s.status == edgeprice_lp::Status::Optimal && model.max_violation(&s.values).within(1e-6) => {
            let mut out = sol.clone();
            out.values = s.values;
            for id in model.binaries() {
                out.values[id.0] = out.values[id.0].round();
            }
            out.objective = model.evaluate_objective(&out.values);
            out
        }
        _ => sol.clone(),
    }
}

/// Number of variables of each kind in a model.
pub fn count_kinds(model: &LinearModel) -> (usize, usize) {
    let b = model.vars.iter().filter(|v| v.kind == VarKind::Binary).count();
    (b, model.num_vars() - b)
}

/// Outcome of a validated single-level solve.
#[derive(Debug, Clone)]
pub struct ValidatedSolve {
    pub extracted: Extracted,
    pub solution: MilpSolution,
    pub bigm: BigMSet,
    pub escalations: usize,
    pub report: BigMReport,
    /// Binaries, continuous variables and rows of the final model.
    pub model_size: (usize, usize, usize),
    /// Time spent building models, summed over escalations.
    pub build_time: Duration,
    /// Time spent in the MILP solver, summed over escalations.
    pub solve_time: Duration,
}

/// Solves one built model. The default runs the embedded branch and bound.
pub type MilpRunner<'a> = &'a dyn Fn(&LinearModel) -> Result<MilpSolution>;

/// Most escalations attempted before declaring the reformulation unsound.
pub const MAX_ESCALATIONS: usize = 3;

/// Builds, solves, extracts and validates big-M values, multiplying every
/// constant by ten whenever a multiplier or slack comes within 1% of its bound.
pub(crate) fn solve_escalating<F>(
    inst: &Instance,
    run: MilpRunner<'_>,
    with_switches: bool,
    build: F,
) -> Result<ValidatedSolve>
where
    F: Fn(&BigMSet) -> Result<(LinearModel, SingleLevelLayout)>,
{
    let mut bigm = derive_bigm(inst);
    let mut last = BigMReport::default();
    let (mut build_time, mut solve_time) = (Duration::ZERO, Duration::ZERO);
    for escalations in 0..=MAX_ESCALATIONS {
        let started = Instant::now();
        let (model, lay) = build(&bigm)?;
        build_time += started.elapsed();
        let started = Instant::now();
        let sol = run(&model)?;
        solve_time += started.elapsed();
        if !sol.status.has_solution() {
            return Err(CoreError::NoSolution(sol.status));
        }
        let sol = minimal_multipliers(&model, &lay, &sol);
        let extracted = extract(inst, &model, &lay, &sol)?;
        let report =
            validate_bigm(inst, &extracted.decision, &extracted.followers, &extracted.duals, &bigm, with_switches);
        if report.is_clean() {
            let (b, c) = count_kinds(&model);
            return Ok(ValidatedSolve {
                extracted,
                solution: sol,
                bigm,
                escalations,
                report,
                model_size: (b, c, model.num_rows()),
                build_time,
                solve_time,
            });
        }
        last = report;
        bigm = bigm.scaled(10.0);
    }
    let worst =
        last.flags.first().map(|f| format!("{} ({}, k={}) = {} vs {}", f.family, f.what, f.k, f.value, f.bound));
    Err(CoreError::ReformulationUnsound(format!(
        "big-M still binding after {MAX_ESCALATIONS} escalations: {}",
        worst.unwrap_or_default()
    )))
}
