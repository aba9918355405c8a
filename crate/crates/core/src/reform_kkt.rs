//! KKT-based single-level model with Fortuny-Amat complementarity switches.

use edgeprice_lp::{LinearModel, MilpConfig, MilpSolution, RowSense, VarId};
use serde::Serialize;

use crate::error::Result;
use crate::follower::DualLayout;
use crate::model::{DualSolution, FollowerSolution, Instance, LeaderDecision};
use crate::single_level::{
    extract, solve_escalating, tag, Builder, Extracted, MilpRunner, SingleLevelLayout, ValidatedSolve,
};

/// Multiplier applied to the dual-side magnitude proposal.
pub const DUAL_SAFETY: f64 = 10.0;

/// Complementarity families in switch order.
pub const FAMILIES: [&str; 8] = [
    "tau/delay cap",
    "mu1/cloud cover",
    "lambda/edge cover",
    "Gamma/edge capacity",
    "eta/eligibility",
    "mu2/budget",
    "zeta/cloud allocation",
    "eps/edge allocation",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BigMSet {
    /// One constant per complementarity family, in [`FAMILIES`] order.
    pub m: [f64; 8],
    /// Shared constant for the `r·μ2` and `t·Γ` products.
    pub lin: f64,
}

impl BigMSet {
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.m;
        m.iter_mut().for_each(|x| *x *= factor);
        Self { m, lin: self.lin * factor }
    }

    pub fn is_valid(&self) -> bool {
        self.m.iter().chain([&self.lin]).all(|x| x.is_finite() && *x > 0.0)
    }
}

/// Derivation trace: the primal bound and dual proposal behind each constant.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BigMDerivation {
    pub primal: [f64; 8],
    pub dual_proposal: f64,
    pub set: BigMSet,
}

pub fn derive_bigm_report(inst: &Instance) -> BigMDerivation {
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    let max_b = max(&mut inst.budget.iter().copied());
    let max_c = max(&mut inst.compute_cap.iter().copied());
    let max_pg = max(&mut inst.price_grid.iter().flatten().copied());
    let max_w = max(&mut inst.delay_weight.iter().copied());
    let max_d = max(&mut inst.delay_edge.iter().flatten().chain(&inst.delay_cloud).copied());
    let max_total_r = max(&mut (0..inst.k).map(|k| inst.total_demand(k)));
    let max_r = max(&mut inst.demand.iter().flatten().copied());
    let max_dcap = max(&mut inst.delay_cap.iter().copied());
    let dual = DUAL_SAFETY * max_b.max(max_pg * max_c).max(max_w * max_d * max_total_r);
    let primal = [max_dcap, max_b / inst.cloud_price, max_c, max_c, max_r, max_b, max_r, max_r];
    let mut m = [0.0; 8];
    for f in 0..8 {
        m[f] = primal[f].max(dual).max(1.0);
    }
    BigMDerivation { primal, dual_proposal: dual, set: BigMSet { m, lin: dual.max(1.0) } }
}

pub fn derive_bigm(inst: &Instance) -> BigMSet {
    derive_bigm_report(inst).set
}

/// Complementarity switches, indexed `[k]...`.
#[derive(Debug, Clone)]
pub struct Switches {
    pub psi: Vec<Vec<VarId>>,
    pub v1: Vec<VarId>,
    pub kappa: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub rho: Vec<Vec<Vec<VarId>>>,
    pub v2: Vec<VarId>,
    pub phi: Vec<Vec<VarId>>,
    pub omega: Vec<Vec<Vec<VarId>>>,
}

#[derive(Debug, Clone)]
pub struct P1Layout {
    pub base: SingleLevelLayout,
    pub switches: Switches,
}

/// Builds the KKT-based model. Multipliers use the Lagrangian sign convention;
/// extraction converts σ back to the follower dual LP convention.
pub fn build_p1(inst: &Instance, bigm: &BigMSet) -> Result<(LinearModel, P1Layout)> {
    if !bigm.is_valid() {
        return Err(crate::CoreError::InvalidArgument(format!("big-M values must be positive and finite: {bigm:?}")));
    }
    let (m, n) = (inst.m, inst.n);
    let mut b = Builder::new(inst, "P1", -1.0);
    b.leader_rows();
    let mut sw = Switches {
        psi: vec![],
        v1: vec![],
        kappa: vec![],
        theta: vec![],
        rho: vec![],
        v2: vec![],
        phi: vec![],
        omega: vec![],
    };
    for k in 0..inst.k {
        let tg = tag(k);
        b.follower_block(k);
        let dl = DualLayout::add_vars(&mut b.lp, m, n, &tg);
        b.products(k, &dl, bigm.lin);
        stationarity(&mut b, k, &dl);
        let fl = b.lay.followers[k].clone();
        let lp = &mut b.lp;
        let sw_i = |lp: &mut LinearModel, s: &str| -> Vec<VarId> {
            (0..m).map(|i| lp.add_binary(format!("{s}[{i}]{tg}"))).collect()
        };
        let psi = sw_i(lp, "psi");
        let phi = sw_i(lp, "Phi");
        let v1 = lp.add_binary(format!("v1{tg}"));
        let v2 = lp.add_binary(format!("v2{tg}"));
        let kappa: Vec<VarId> = (0..n).map(|j| lp.add_binary(format!("kappa[{j}]{tg}"))).collect();
        let theta: Vec<VarId> = (0..n).map(|j| lp.add_binary(format!("theta[{j}]{tg}"))).collect();
        let rho: Vec<Vec<VarId>> =
            (0..m).map(|i| (0..n).map(|j| lp.add_binary(format!("rho[{i}][{j}]{tg}"))).collect()).collect();
        let om: Vec<Vec<VarId>> =
            (0..m).map(|i| (0..n).map(|j| lp.add_binary(format!("Omega[{i}][{j}]{tg}"))).collect()).collect();

        // Each pair: slack ≤ u·M and multiplier ≤ (1 − u)·M, with slack given as
        // (coefficients, constant) meaning Σ coeff·var + constant.
        let pair = |lp: &mut LinearModel,
                    name: String,
                    slack: Vec<(VarId, f64)>,
                    constant: f64,
                    mult: VarId,
                    u: VarId,
                    big: f64| {
            let mut c = slack;
            c.push((u, -big));
            lp.add_row(format!("{name}_slack"), c, RowSense::Le, -constant);
            lp.add_row(format!("{name}_mult"), [(mult, 1.0), (u, big)], RowSense::Le, big);
        };
        let mm = bigm.m;
        for i in 0..m {
            let r = inst.demand[i][k];
            pair(
                lp,
                format!("cs_tau[{i}]{tg}"),
                vec![(fl.avg_delay[i], -1.0)],
                inst.delay_cap[k],
                dl.tau[i],
                psi[i],
                mm[0],
            );
            pair(lp, format!("cs_zeta[{i}]{tg}"), vec![(fl.x_cloud[i], 1.0)], 0.0, dl.zeta[i], phi[i], mm[6]);
            for j in 0..n {
                let a = f64::from(inst.eligible[i][j][k]);
                pair(
                    lp,
                    format!("cs_eta[{i}][{j}]{tg}"),
                    vec![(fl.x_edge[i][j], -1.0)],
                    a * r,
                    dl.eta[i][j],
                    rho[i][j],
                    mm[4],
                );
                pair(
                    lp,
                    format!("cs_eps[{i}][{j}]{tg}"),
                    vec![(fl.x_edge[i][j], 1.0)],
                    0.0,
                    dl.eps[i][j],
                    om[i][j],
                    mm[7],
                );
            }
        }
        let mut c: Vec<_> = (0..m).map(|i| (fl.x_cloud[i], -1.0)).collect();
        c.push((fl.y_cloud, 1.0));
        pair(lp, format!("cs_mu1{tg}"), c, 0.0, dl.mu1, v1, mm[1]);
        for j in 0..n {
            let mut c: Vec<_> = (0..m).map(|i| (fl.x_edge[i][j], -1.0)).collect();
            c.push((fl.y_edge[j], 1.0));
            pair(lp, format!("cs_lambda[{j}]{tg}"), c, 0.0, dl.lambda[j], kappa[j], mm[2]);
            let cap = inst.compute_cap[j];
            pair(
                lp,
                format!("cs_Gamma[{j}]{tg}"),
                vec![(b.lay.t[j][k], cap), (fl.y_edge[j], -1.0)],
                0.0,
                dl.gamma[j],
                theta[j],
                mm[3],
            );
        }
        let mut c = vec![(fl.y_cloud, -inst.cloud_price)];
        for j in 0..n {
            for l in 0..inst.v {
                c.push((b.lay.omega[k][j][l], -inst.price_grid[j][l]));
            }
        }
        pair(lp, format!("cs_mu2{tg}"), c, inst.budget[k], dl.mu2, v2, mm[5]);

        b.revenue_rows(k, &dl);
        b.lay.duals.push(dl);
        sw.psi.push(psi);
        sw.v1.push(v1);
        sw.kappa.push(kappa);
        sw.theta.push(theta);
        sw.rho.push(rho);
        sw.v2.push(v2);
        sw.phi.push(phi);
        sw.omega.push(om);
    }
    b.capacity_rows();
    b.objective();
    Ok((b.lp, P1Layout { base: b.lay, switches: sw }))
}

/// Gradient of the follower Lagrangian in every primal variable.
fn stationarity(b: &mut Builder, k: usize, dl: &DualLayout) {
    let inst = b.inst;
    let tg = tag(k);
    let w = inst.delay_weight[k];
    let lp = &mut b.lp;
    for i in 0..inst.m {
        let d0 = inst.delay_cloud[i];
        lp.add_row(
            format!("st_x0[{i}]{tg}"),
            [(dl.xi[i], -1.0), (dl.sigma[i], d0), (dl.mu1, 1.0), (dl.zeta[i], -1.0)],
            RowSense::Eq,
            -w * d0,
        );
        for j in 0..inst.n {
            let d = inst.delay_edge[i][j];
            lp.add_row(
                format!("st_x[{i}][{j}]{tg}"),
                [(dl.xi[i], -1.0), (dl.sigma[i], d), (dl.lambda[j], 1.0), (dl.eta[i][j], 1.0), (dl.eps[i][j], -1.0)],
                RowSense::Eq,
                -w * d,
            );
        }
        lp.add_row(format!("st_da[{i}]{tg}"), [(dl.sigma[i], -inst.demand[i][k]), (dl.tau[i], 1.0)], RowSense::Eq, 0.0);
    }
    let p0 = inst.cloud_price;
    lp.add_row(format!("st_y0{tg}"), [(dl.mu1, -1.0), (dl.mu2, p0)], RowSense::Eq, -p0);
    for j in 0..inst.n {
        let mut c = vec![(dl.lambda[j], -1.0), (dl.gamma[j], 1.0)];
        for l in 0..inst.v {
            let p = inst.price_grid[j][l];
            c.push((b.lay.r[j][l], p));
            c.push((b.lay.pi[k][j][l], p));
        }
        lp.add_row(format!("st_y[{j}]{tg}"), c, RowSense::Eq, 0.0);
    }
}

/// Solves the KKT model after applying `restrict`, escalating big-M values
/// until validation comes back clean.
pub fn solve_p1_validated(
    inst: &Instance,
    cfg: &MilpConfig,
    restrict: &dyn Fn(&mut LinearModel, &SingleLevelLayout) -> Result<()>,
) -> Result<ValidatedSolve> {
    solve_p1_validated_with(inst, &|m| Ok(edgeprice_lp::solve_milp(m, cfg)?), restrict)
}

pub fn solve_p1_validated_with(
    inst: &Instance,
    run: MilpRunner<'_>,
    restrict: &dyn Fn(&mut LinearModel, &SingleLevelLayout) -> Result<()>,
) -> Result<ValidatedSolve> {
    solve_escalating(inst, run, true, |bigm| {
        let (mut lp, lay) = build_p1(inst, bigm)?;
        restrict(&mut lp, &lay.base)?;
        Ok((lp, lay.base))
    })
}

pub fn extract_solution_p1(
    inst: &Instance,
    model: &LinearModel,
    lay: &P1Layout,
    sol: &MilpSolution,
) -> Result<Extracted> {
    extract(inst, model, &lay.base, sol)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BigMFlag {
    pub family: String,
    pub k: usize,
    pub what: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BigMReport {
    pub flags: Vec<BigMFlag>,
}

impl BigMReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Flags every multiplier or slack above 99% of the constant that bounds it.
/// `duals` must use the follower dual LP convention; only sign-constrained
/// multipliers are bounded, so the σ convention does not matter here.
pub fn validate_bigm(
    inst: &Instance,
    ld: &LeaderDecision,
    fs: &[FollowerSolution],
    duals: &[DualSolution],
    bigm: &BigMSet,
    with_switches: bool,
) -> BigMReport {
    let mut flags = Vec::new();
    let mut check = |family: &str, k: usize, what: String, value: f64, bound: f64| {
        if value > 0.99 * bound {
            flags.push(BigMFlag { family: family.to_string(), k, what, value, bound });
        }
    };
    for k in 0..inst.k.min(fs.len()).min(duals.len()) {
        let (f, d) = (&fs[k], &duals[k]);
        check("linearization", k, "mu2".into(), d.mu2, bigm.lin);
        for j in 0..inst.n {
            check("linearization", k, format!("Gamma[{j}]"), d.gamma[j], bigm.lin);
        }
        if !with_switches {
            continue;
        }
        let mm = bigm.m;
        for i in 0..inst.m {
            check(FAMILIES[0], k, format!("tau[{i}]"), d.tau[i], mm[0]);
            check(FAMILIES[0], k, format!("slack[{i}]"), inst.delay_cap[k] - f.avg_delay[i], mm[0]);
            check(FAMILIES[6], k, format!("zeta[{i}]"), d.zeta[i], mm[6]);
            check(FAMILIES[6], k, format!("x0[{i}]"), f.x_cloud[i], mm[6]);
            for j in 0..inst.n {
                let cap = f64::from(inst.eligible[i][j][k]) * inst.demand[i][k];
                check(FAMILIES[4], k, format!("eta[{i}][{j}]"), d.eta[i][j], mm[4]);
                check(FAMILIES[4], k, format!("slack[{i}][{j}]"), cap - f.x_edge[i][j], mm[4]);
                check(FAMILIES[7], k, format!("eps[{i}][{j}]"), d.eps[i][j], mm[7]);
                check(FAMILIES[7], k, format!("x[{i}][{j}]"), f.x_edge[i][j], mm[7]);
            }
        }
        check(FAMILIES[1], k, "mu1".into(), d.mu1, mm[1]);
        check(FAMILIES[1], k, "slack".into(), f.y_cloud - f.x_cloud.iter().sum::<f64>(), mm[1]);
        for j in 0..inst.n {
            let routed: f64 = (0..inst.m).map(|i| f.x_edge[i][j]).sum();
            let t = if ld.placed[j][k] { 1.0 } else { 0.0 };
            check(FAMILIES[2], k, format!("lambda[{j}]"), d.lambda[j], mm[2]);
            check(FAMILIES[2], k, format!("slack[{j}]"), f.y_edge[j] - routed, mm[2]);
            check(FAMILIES[3], k, format!("Gamma[{j}]"), d.gamma[j], mm[3]);
            check(FAMILIES[3], k, format!("slack[{j}]"), inst.compute_cap[j] * t - f.y_edge[j], mm[3]);
        }
        let spend = inst.cloud_price * f.y_cloud + (0..inst.n).map(|j| ld.price[j] * f.y_edge[j]).sum::<f64>();
        check(FAMILIES[5], k, "mu2".into(), d.mu2, mm[5]);
        check(FAMILIES[5], k, "slack".into(), inst.budget[k] - spend, mm[5]);
    }
    BigMReport { flags }
}
