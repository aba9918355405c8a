//! Experiment engine behind the CLI: one solve under a pricing scheme,
//! scheme comparisons, sensitivity sweeps and the reformulation timing table.
//!
//! Every solve produces a [`SolveReport`], a flat JSON-friendly record of
//! what was run and what came back. Sweeps additionally persist the sampled
//! instance and the decision artifacts so each CSV row can be recomputed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use edgeprice_lp::{
    export_mps, import_solution, solve_milp, LinearModel, MilpConfig, MilpSolution, MpsNames, Status, ViolationAt,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::solve_single_en;
use crate::error::{CoreError, Result};
use crate::model::{
    leader_profit, scale_instance, DualSolution, FollowerSolution, Instance, LeaderChoice, LeaderDecision,
    ScalingFactors, SCHEMA_VERSION,
};
use crate::oracle::{brute_force_bilevel_restricted, OracleLimits};
use crate::par::{self, Execution};
use crate::reform_dual::{solve_p2_validated_with, verify_bilevel_optimality, BilevelReport};
use crate::reform_kkt::{solve_p1_validated_with, BigMSet};
use crate::scenario::{sample_instance, ScenarioConfig};
use crate::single_level::{SingleLevelLayout, ValidatedSolve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Dyn,
    Flat,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Kkt,
    #[default]
    Dual,
    Oracle,
    SingleEn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Embedded,
    External,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = CoreError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(CoreError::InvalidArgument(format!(
                        "unknown {} `{other}`; expected one of: {}",
                        stringify!($ty).to_lowercase(),
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Scheme { Dyn => "dyn", Flat => "flat", Avg => "avg" });
keyword_enum!(Method { Kkt => "kkt", Dual => "dual", Oracle => "oracle", SingleEn => "single-en" });
keyword_enum!(SolverKind { Embedded => "embedded", External => "external" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub method: Method,
    pub solver: SolverKind,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, method: Method) -> Self {
        Self { scheme, method, solver: SolverKind::Embedded }
    }

    /// Checks the preconditions of the scheme and method against `inst`.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.scheme != Scheme::Dyn && !inst.uniform_grid() {
            return Err(CoreError::InvalidArgument(format!(
                "scheme `{}` needs identical price grids at every EN",
                self.scheme
            )));
        }
        if self.scheme == Scheme::Avg {
            avg_level(inst)?;
        }
        if self.method == Method::SingleEn && inst.n != 1 {
            return Err(CoreError::InvalidArgument(format!("method `single-en` needs exactly one EN, got {}", inst.n)));
        }
        if self.solver == SolverKind::External && matches!(self.method, Method::Oracle | Method::SingleEn) {
            return Err(CoreError::InvalidArgument(format!("method `{}` has no external solver path", self.method)));
        }
        Ok(())
    }
}

/// Grid level whose price equals the mean of the (shared) grid.
pub fn avg_level(inst: &Instance) -> Result<usize> {
    let grid = inst.price_grid.first().ok_or_else(|| CoreError::InvalidArgument("instance has no EN".into()))?;
    let mean = grid.iter().sum::<f64>() / grid.len() as f64;
    grid.iter().position(|&p| (p - mean).abs() <= 1e-9 * (1.0 + mean.abs())).ok_or_else(|| {
        CoreError::InvalidArgument(format!("grid mean {mean} is not a grid point, so `avg` is undefined"))
    })
}

fn scheme_admits(scheme: Scheme, avg: Option<usize>, c: &LeaderChoice) -> bool {
    match scheme {
        Scheme::Dyn => true,
        Scheme::Flat => c.price_level.windows(2).all(|w| w[0] == w[1]),
        Scheme::Avg => c.price_level.iter().all(|&l| Some(l) == avg),
    }
}

/// Adds the scheme's price restriction to a built single-level model.
fn restrict_prices(scheme: Scheme, avg: Option<usize>, lp: &mut LinearModel, lay: &SingleLevelLayout) -> Result<()> {
    match scheme {
        Scheme::Dyn => {}
        Scheme::Flat => {
            for j in 1..lay.r.len() {
                for (l, (&a, &b)) in lay.r[j].iter().zip(&lay.r[0]).enumerate() {
                    lp.add_row(format!("flat[{j}][{l}]"), vec![(a, 1.0), (b, -1.0)], edgeprice_lp::RowSense::Eq, 0.0);
                }
            }
        }
        Scheme::Avg => {
            let level = avg.ok_or_else(|| CoreError::InvalidArgument("avg level missing".into()))?;
            for row in &lay.r {
                for (l, &id) in row.iter().enumerate() {
                    lp.fix(id, if l == level { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(())
}

/// Command used for `--solver external`. It is called as
/// `COMMAND... MODEL.mps SOLUTION.txt [--gap G] [--time-limit T]`.
pub fn default_external_command() -> Vec<String> {
    let script = std::env::var("EDGEPRICE_HIGHS_SCRIPT")
        .unwrap_or_else(|_| concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/highs_solve.py").to_string());
    vec!["python3".to_string(), script]
}

/// True when the default external command can import its solver.
pub fn external_solver_available() -> bool {
    Command::new("python3").args(["-c", "import highspy"]).output().map(|o| o.status.success()).unwrap_or(false)
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// MILP start in the variable layout of the single-level model.
    pub initial_solution: Option<Vec<f64>>,
    /// Writes the (last) single-level model here before solving it.
    pub mps_out: Option<PathBuf>,
    /// Reads `name value` lines instead of running a solver.
    pub import_solution: Option<PathBuf>,
    pub external_command: Vec<String>,
    pub oracle_limits: OracleLimits,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap: 1e-4,
            time_limit: None,
            node_limit: None,
            initial_solution: None,
            mps_out: None,
            import_solution: None,
            external_command: default_external_command(),
            oracle_limits: OracleLimits::default(),
            exec: Execution::default(),
        }
    }
}

impl SolveOptions {
    fn milp_config(&self) -> MilpConfig {
        MilpConfig {
            gap_tol: self.gap,
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            initial_solution: self.initial_solution.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelSize {
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
}

/// Machine-readable record of one solve.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub schema_version: u32,
    pub instance_hash: String,
    pub scheme: Scheme,
    pub method: Method,
    pub solver: SolverKind,
    pub status: String,
    pub profit: Option<f64>,
    pub best_bound: Option<f64>,
    pub relative_gap: Option<f64>,
    pub decision: Option<LeaderDecision>,
    pub followers: Vec<FollowerSolution>,
    pub duals: Vec<DualSolution>,
    pub edge_workload: Option<f64>,
    pub cloud_workload: Option<f64>,
    pub build_seconds: f64,
    pub solve_seconds: f64,
    pub wall_seconds: f64,
    /// Branch-and-bound nodes, or candidates for the oracle.
    pub nodes: usize,
    pub model: Option<ModelSize>,
    pub bigm: Option<BigMSet>,
    pub escalations: usize,
    pub bilevel: Option<BilevelReport>,
    pub error: Option<String>,
}

impl SolveReport {
    fn empty(inst: &Instance, spec: &SchemeSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            instance_hash: instance_hash(inst),
            scheme: spec.scheme,
            method: spec.method,
            solver: spec.solver,
            status: String::new(),
            profit: None,
            best_bound: None,
            relative_gap: None,
            decision: None,
            followers: Vec::new(),
            duals: Vec::new(),
            edge_workload: None,
            cloud_workload: None,
            build_seconds: 0.0,
            solve_seconds: 0.0,
            wall_seconds: 0.0,
            nodes: 0,
            model: None,
            bigm: None,
            escalations: 0,
            bilevel: None,
            error: None,
        }
    }

    /// Report for a solve that produced no decision.
    pub fn failure(inst: &Instance, spec: &SchemeSpec, err: &CoreError) -> Self {
        let mut r = Self::empty(inst, spec);
        r.status = failure_status(err).to_string();
        r.error = Some(err.to_string());
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn failure_status(err: &CoreError) -> &'static str {
    match err {
        CoreError::NoSolution(s) => s.as_str(),
        CoreError::Infeasible(_) => Status::Infeasible.as_str(),
        CoreError::InvalidArgument(_) | CoreError::InvalidInstance(_) => "invalid-argument",
        CoreError::CandidateBudget { .. } => "candidate-budget",
        _ => "error",
    }
}

/// Process exit code for a solve: 0 success, 2 infeasible, 3 limit hit,
/// 4 usage error, 1 anything else.
pub fn exit_code(outcome: &Result<SchemeOutcome>) -> i32 {
    match outcome {
        Ok(o) => match o.status {
            Status::TimeLimit | Status::NodeLimit | Status::GapLimit => 3,
            _ => 0,
        },
        Err(CoreError::Infeasible(_)) | Err(CoreError::NoSolution(Status::Infeasible)) => 2,
        Err(CoreError::NoSolution(Status::TimeLimit | Status::NodeLimit | Status::GapLimit)) => 3,
        Err(CoreError::CandidateBudget { .. }) => 3,
        Err(CoreError::InvalidArgument(_) | CoreError::InvalidInstance(_)) => 4,
        Err(_) => 1,
    }
}

/// SHA-256 of the instance's canonical JSON.
pub fn instance_hash(inst: &Instance) -> String {
    Sha256::digest(inst.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub profit: f64,
    pub decision: LeaderDecision,
    pub followers: Vec<FollowerSolution>,
    pub status: Status,
    /// Final single-level point, usable as a MILP start for a looser scheme.
    pub start: Option<Vec<f64>>,
    pub report: SolveReport,
}

/// Solves `inst` under one pricing scheme with the requested method.
pub fn run_scheme(inst: &Instance, spec: &SchemeSpec, opts: &SolveOptions) -> Result<SchemeOutcome> {
    crate::model::ensure_valid(inst)?;
    spec.validate(inst)?;
    let avg = if spec.scheme == Scheme::Avg { Some(avg_level(inst)?) } else { None };
    let started = Instant::now();
    let mut report = SolveReport::empty(inst, spec);
    let (profit, decision, followers, status, start) = match spec.method {
        Method::Kkt | Method::Dual => {
            let restrict = |lp: &mut LinearModel, lay: &SingleLevelLayout| restrict_prices(spec.scheme, avg, lp, lay);
            let run = |m: &LinearModel| run_milp(m, spec.solver, opts);
            let v: ValidatedSolve = if spec.method == Method::Kkt {
                solve_p1_validated_with(inst, &run, &restrict)?
            } else {
                solve_p2_validated_with(inst, &run, &restrict)?
            };
            let s = &v.solution;
            report.best_bound = Some(s.best_bound);
            report.relative_gap = Some(s.relative_gap);
            report.nodes = s.nodes_explored;
            report.model =
                Some(ModelSize { binaries: v.model_size.0, continuous: v.model_size.1, constraints: v.model_size.2 });
            report.bigm = Some(v.bigm);
            report.escalations = v.escalations;
            report.build_seconds = v.build_time.as_secs_f64();
            report.solve_seconds = v.solve_time.as_secs_f64();
            report.duals = v.extracted.duals.clone();
            let e = v.extracted;
            (e.profit, e.decision, e.followers, s.status, Some(v.solution.values))
        }
        Method::Oracle => {
            let keep = |c: &LeaderChoice| scheme_admits(spec.scheme, avg, c);
            let o = brute_force_bilevel_restricted(inst, opts.oracle_limits, opts.exec, &keep)?;
            report.nodes = o.candidates_examined;
            (o.best_profit, o.best_decision, o.followers, Status::Optimal, None)
        }
        Method::SingleEn => {
            let (profit, decision, followers) = single_en_scheme(inst, avg)?;
            (profit, decision, followers, Status::Optimal, None)
        }
    };
    report.wall_seconds = started.elapsed().as_secs_f64();
    if spec.method.is_enumerative() {
        report.solve_seconds = report.wall_seconds;
    }
    report.status = status.as_str().to_string();
    report.profit = Some(profit);
    report.edge_workload = Some(followers.iter().map(FollowerSolution::edge_total).sum());
    report.cloud_workload = Some(followers.iter().map(|f| f.y_cloud).sum());
    report.bilevel = Some(verify_bilevel_optimality(inst, &decision, &followers)?);
    report.decision = Some(decision.clone());
    report.followers = followers.clone();
    Ok(SchemeOutcome { profit, decision, followers, status, start, report })
}

impl Method {
    fn is_enumerative(self) -> bool {
        matches!(self, Method::Oracle | Method::SingleEn)
    }
}

/// With one EN, Dyn and Flat coincide; Avg solves the one-level grid.
fn single_en_scheme(inst: &Instance, avg: Option<usize>) -> Result<(f64, LeaderDecision, Vec<FollowerSolution>)> {
    match avg {
        None => {
            let r = solve_single_en(inst)?;
            Ok((r.profit, r.decision, r.followers))
        }
        Some(level) => {
            let mut pinned = inst.clone();
            pinned.price_grid = vec![vec![inst.price_grid[0][level]]];
            pinned.v = 1;
            let r = solve_single_en(&pinned)?;
            let mut decision = r.decision;
            decision.price_level = vec![level];
            Ok((r.profit, decision, r.followers))
        }
    }
}

fn run_milp(model: &LinearModel, solver: SolverKind, opts: &SolveOptions) -> Result<MilpSolution> {
    if let Some(path) = &opts.mps_out {
        std::fs::write(path, export_mps(model))?;
    }
    if let Some(path) = &opts.import_solution {
        return read_solution_file(model, &std::fs::read_to_string(path)?);
    }
    match solver {
        SolverKind::Embedded => Ok(solve_milp(model, &opts.milp_config())?),
        SolverKind::External => solve_external(model, opts),
    }
}

/// Imports `name value` lines, accepting either model labels or the short
/// MPS column names.
fn read_solution_file(model: &LinearModel, text: &str) -> Result<MilpSolution> {
    let claimed = text.lines().find_map(|l| l.strip_prefix("# status ")).map(str::to_string);
    let imported = match import_solution(model, text) {
        Ok(s) => s,
        Err(direct) => {
            let translated = MpsNames::new(model).translate_solution(model, text).map_err(|_| direct)?;
            import_solution(model, &translated)?
        }
    };
    if !imported.feasible {
        return Err(CoreError::External(format!(
            "imported point is not feasible ({} violated by {:.3e}, integral: {})",
            describe_violation(model, imported.worst_violation.location),
            imported.worst_violation.amount,
            imported.integral
        )));
    }
    let mut sol = imported.solution;
    if let Some(status) = claimed {
        if !status.starts_with("Optimal") {
            sol.status = Status::TimeLimit;
        }
    }
    Ok(sol)
}

fn describe_violation(model: &LinearModel, at: ViolationAt) -> String {
    match at {
        ViolationAt::None => "nothing".to_string(),
        ViolationAt::Bound(v) => format!("bound of `{}`", model.var(v).name),
        ViolationAt::Row(r) => format!("row `{}`", model.rows[r.0].name),
    }
}

static EXTERNAL_RUN: AtomicU64 = AtomicU64::new(0);

fn solve_external(model: &LinearModel, opts: &SolveOptions) -> Result<MilpSolution> {
    let (program, args) = opts
        .external_command
        .split_first()
        .ok_or_else(|| CoreError::External("empty external solver command".into()))?;
    let id = EXTERNAL_RUN.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("edgeprice-{}-{id}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let mps = dir.join("model.mps");
    let sol = dir.join("model.sol");
    std::fs::write(&mps, export_mps(model))?;
    let mut cmd = Command::new(program);
    cmd.args(args).arg(&mps).arg(&sol).arg("--gap").arg(opts.gap.to_string());
    if let Some(t) = opts.time_limit {
        cmd.arg("--time-limit").arg(t.as_secs_f64().to_string());
    }
    let started = Instant::now();
    let out = cmd.output().map_err(|e| CoreError::External(format!("cannot run `{program}`: {e}")))?;
    let elapsed = started.elapsed();
    let result = if out.status.success() {
        std::fs::read_to_string(&sol).map_err(CoreError::from).and_then(|text| read_solution_file(model, &text))
    } else {
        Err(CoreError::External(String::from_utf8_lossy(&out.stderr).trim().to_string()))
    };
    let _ = std::fs::remove_dir_all(&dir);
    let mut s = result?;
    s.wall_time = elapsed;
    Ok(s)
}

/// Solves Avg, Flat and Dyn in that order, seeding each MILP with the
/// previous scheme's point. Results come back in [`Scheme::ALL`] order.
pub fn compare_schemes(inst: &Instance, method: Method, opts: &SolveOptions) -> Vec<(Scheme, Result<SchemeOutcome>)> {
    run_chain(inst, method, &[Scheme::Dyn, Scheme::Flat, Scheme::Avg], opts)
}

fn run_chain(
    inst: &Instance,
    method: Method,
    schemes: &[Scheme],
    opts: &SolveOptions,
) -> Vec<(Scheme, Result<SchemeOutcome>)> {
    let mut order: Vec<Scheme> = schemes.to_vec();
    order.sort_by_key(|s| std::cmp::Reverse(*s));
    order.dedup();
    let mut start: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(order.len());
    for scheme in order {
        let mut o = opts.clone();
        if o.initial_solution.is_none() {
            o.initial_solution = start.clone();
        }
        let res = run_scheme(inst, &SchemeSpec::new(scheme, method), &o);
        if let Ok(r) = &res {
            if r.start.is_some() {
                start = r.start.clone();
            }
        }
        out.push((scheme, res));
    }
    out.sort_by_key(|(s, _)| *s);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rho,
    Lambda,
    Delta,
    Gamma0,
    M,
    K,
}

keyword_enum!(Axis { Rho => "rho", Lambda => "lambda", Delta => "delta", Gamma0 => "gamma0", M => "m", K => "k" });

impl Axis {
    pub fn check_value(self, value: f64) -> Result<()> {
        let ok = match self {
            Axis::Delta => value >= 0.0 && value.is_finite(),
            Axis::M | Axis::K => value >= 1.0 && value.fract() == 0.0 && value <= 1e6,
            _ => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidArgument(format!("`{value}` is not a valid value for axis `{self}`")))
        }
    }
}

/// Instance for one sweep cell: sampled from `base` at `seed`, then resized
/// (`m`, `k`) or scaled (the remaining axes).
pub fn sweep_instance(base: &ScenarioConfig, axis: Axis, value: f64, seed: u64) -> Result<Instance> {
    axis.check_value(value)?;
    let mut cfg = base.clone();
    cfg.seed = seed;
    match axis {
        Axis::M => cfg.m = value as usize,
        Axis::K => cfg.k = value as usize,
        _ => {}
    }
    let inst = sample_instance(&cfg)?;
    let mut f = ScalingFactors::default();
    match axis {
        Axis::Rho => f.cloud_price = value,
        Axis::Lambda => f.penalty = value,
        Axis::Gamma0 => f.capacity = value,
        Axis::Delta if value == 0.0 => {
            let mut zero = inst;
            zero.demand.iter_mut().flatten().for_each(|r| *r = 0.0);
            return Ok(zero);
        }
        Axis::Delta => f.demand = value,
        Axis::M | Axis::K => return Ok(inst),
    }
    scale_instance(&inst, &f)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub method: Method,
    pub opts: SolveOptions,
    /// Cells run through [`par::map`] with this schedule.
    pub exec: Execution,
    /// Run directory for the CSV, instances and decision artifacts.
    pub out_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(base: ScenarioConfig, axis: Axis, values: Vec<f64>) -> Self {
        Self {
            base,
            axis,
            values,
            schemes: Scheme::ALL.to_vec(),
            seeds: vec![0],
            method: Method::Dual,
            opts: SolveOptions::default(),
            exec: Execution::default(),
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub status: String,
    pub profit: Option<f64>,
    pub edge_workload: Option<f64>,
    pub cloud_workload: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub instance_hash: String,
    /// Artifact path relative to the run directory, empty when not persisted.
    pub artifact: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Rows for one scheme, in sweep order.
    pub fn series(&self, scheme: Scheme, seed: u64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.scheme == scheme && r.seed == seed).collect()
    }
}

/// Decision record persisted per sweep row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecisionArtifact {
    pub instance_file: String,
    pub instance_hash: String,
    pub scheme: Scheme,
    pub method: Method,
    pub profit: f64,
    pub decision: LeaderDecision,
    pub followers: Vec<FollowerSolution>,
    pub duals: Vec<DualSolution>,
}

impl DecisionArtifact {
    /// Recomputes the leader profit from the stored decision.
    pub fn recompute_profit(&self, inst: &Instance) -> Result<f64> {
        leader_profit(inst, &self.decision, &self.followers)
    }
}

/// File stem shared by a cell's instance and artifacts.
fn cell_stem(axis: Axis, value: f64, seed: u64) -> String {
    format!("{axis}-{value}-s{seed}")
}

pub fn sweep_csv_path(dir: &Path, axis: Axis) -> PathBuf {
    dir.join(format!("sweep_{axis}.csv"))
}

/// Runs every (value, seed) cell, each cell solving its schemes in the
/// MILP-start order. Cell failures are recorded per row.
pub fn run_sensitivity_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    for &v in &cfg.values {
        cfg.axis.check_value(v)?;
    }
    if cfg.schemes.is_empty() || cfg.seeds.is_empty() {
        return Err(CoreError::InvalidArgument("a sweep needs at least one scheme and one seed".into()));
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir.join("instances"))?;
        std::fs::create_dir_all(dir.join("artifacts"))?;
    }
    let cells: Vec<(f64, u64)> = cfg.values.iter().flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s))).collect();
    let mut cell_opts = cfg.opts.clone();
    if cfg.exec == Execution::Parallel {
        cell_opts.exec = Execution::Sequential;
    }
    let per_cell = par::map(&cells, cfg.exec, |&(value, seed)| sweep_cell(cfg, &cell_opts, value, seed));
    let mut rows = Vec::new();
    for cell in per_cell {
        rows.extend(cell?);
    }
    let result = SweepResult { rows };
    if let Some(dir) = &cfg.out_dir {
        result.write_csv(&sweep_csv_path(dir, cfg.axis))?;
    }
    Ok(result)
}

fn sweep_cell(cfg: &SweepConfig, opts: &SolveOptions, value: f64, seed: u64) -> Result<Vec<SweepRow>> {
    let blank = |scheme: Scheme, hash: &str, status: &str, err: String| SweepRow {
        axis: cfg.axis,
        value,
        seed,
        scheme,
        status: status.to_string(),
        profit: None,
        edge_workload: None,
        cloud_workload: None,
        solve_seconds: None,
        instance_hash: hash.to_string(),
        artifact: String::new(),
        error: err,
    };
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let inst = match sweep_instance(&cfg.base, cfg.axis, value, seed) {
        Ok(i) => i,
        Err(e) => return Ok(schemes.iter().map(|&s| blank(s, "", failure_status(&e), e.to_string())).collect()),
    };
    let hash = instance_hash(&inst);
    let stem = cell_stem(cfg.axis, value, seed);
    let instance_file = format!("instances/{stem}.json");
    if let Some(dir) = &cfg.out_dir {
        inst.save(&dir.join(&instance_file))?;
    }
    let mut rows = Vec::with_capacity(schemes.len());
    for (scheme, res) in run_chain(&inst, cfg.method, &schemes, opts) {
        match res {
            Ok(o) => {
                let mut artifact = String::new();
                if let Some(dir) = &cfg.out_dir {
                    artifact = format!("artifacts/{stem}-{scheme}.json");
                    let rec = DecisionArtifact {
                        instance_file: instance_file.clone(),
                        instance_hash: hash.clone(),
                        scheme,
                        method: cfg.method,
                        profit: o.profit,
                        decision: o.decision.clone(),
                        followers: o.followers.clone(),
                        duals: o.report.duals.clone(),
                    };
                    std::fs::write(dir.join(&artifact), serde_json::to_string_pretty(&rec)? + "\n")?;
                }
                rows.push(SweepRow {
                    status: o.report.status.clone(),
                    profit: Some(o.profit),
                    edge_workload: o.report.edge_workload,
                    cloud_workload: o.report.cloud_workload,
                    solve_seconds: Some(o.report.wall_seconds),
                    artifact,
                    ..blank(scheme, &hash, "", String::new())
                });
            }
            Err(e) => rows.push(blank(scheme, &hash, failure_status(&e), e.to_string())),
        }
    }
    Ok(rows)
}

/// The size grid of the published timing table: `(M, N, K)` triples.
pub fn table1_grid() -> Vec<(usize, usize, usize)> {
    let mut g: Vec<(usize, usize, usize)> = [2, 4, 6].iter().map(|&m| (m, 4, 6)).collect();
    g.extend([4, 6, 8].iter().map(|&n| (10, n, 6)));
    g.extend([4, 6, 8, 10].iter().map(|&k| (10, 4, k)));
    g
}

/// Small full-factorial grid over `M, N, K ∈ {2, 4}`.
pub fn small_timing_grid() -> Vec<(usize, usize, usize)> {
    let mut g = Vec::new();
    for m in [2, 4] {
        for n in [2, 4] {
            for k in [2, 4] {
                g.push((m, n, k));
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct TimingRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub seed: u64,
    pub status: String,
    /// Build plus solve time; `None` when the time limit was hit.
    pub seconds: Option<f64>,
    pub build_seconds: f64,
    pub profit: Option<f64>,
}

impl TimingRow {
    pub fn seconds_cell(&self) -> String {
        self.seconds.map_or_else(|| "NA".to_string(), |s| format!("{s:.4}"))
    }
}

/// Times each method on a seeded instance per grid cell, one solve at a time.
pub fn run_timing_benchmark(
    grid: &[(usize, usize, usize)],
    methods: &[Method],
    time_limit: Duration,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    if let Some(m) = methods.iter().find(|m| !matches!(m, Method::Kkt | Method::Dual)) {
        return Err(CoreError::InvalidArgument(format!("method `{m}` is not a reformulation")));
    }
    let opts = SolveOptions { time_limit: Some(time_limit), ..SolveOptions::default() };
    let mut rows = Vec::new();
    for &(m, n, k) in grid {
        let inst = sample_instance(&ScenarioConfig::sized(seed, m, n, k))?;
        for &method in methods {
            let started = Instant::now();
            let res = run_scheme(&inst, &SchemeSpec::new(Scheme::Dyn, method), &opts);
            let elapsed = started.elapsed().as_secs_f64();
            let row = match &res {
                Ok(o) => TimingRow {
                    m,
                    n,
                    k,
                    method,
                    seed,
                    status: o.report.status.clone(),
                    seconds: (o.status != Status::TimeLimit).then_some(elapsed),
                    build_seconds: o.report.build_seconds,
                    profit: Some(o.profit),
                },
                Err(e) => TimingRow {
                    m,
                    n,
                    k,
                    method,
                    seed,
                    status: failure_status(e).to_string(),
                    seconds: proven_infeasible(e).then_some(elapsed),
                    build_seconds: 0.0,
                    profit: None,
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn proven_infeasible(e: &CoreError) -> bool {
    matches!(e, CoreError::Infeasible(_) | CoreError::NoSolution(Status::Infeasible))
}

pub fn write_timing_csv(rows: &[TimingRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "n", "k", "method", "seed", "status", "seconds", "build_seconds", "profit"])?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.method.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            r.seconds_cell(),
            format!("{:.6}", r.build_seconds),
            r.profit.map_or_else(String::new, |p| p.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median of the values; `None` for an empty slice. NaNs sort last.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}
