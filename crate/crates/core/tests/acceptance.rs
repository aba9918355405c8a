//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, run as a plain
//! binary so the lines always reach stdout.

mod common;
#[path = "../../lp/tests/common/mod.rs"]
mod lp_oracle;

use std::time::{Duration, Instant};

use common::{close, single_en, tiny};
use edgeprice_core::analytic::solve_single_en;
use edgeprice_core::follower::{check_strong_duality, complementarity_residuals, solve_follower, FollowerContext};
use edgeprice_core::harness::{
    compare_schemes, external_solver_available, median, run_scheme, run_sensitivity_sweep, run_timing_benchmark,
    small_timing_grid, Axis, Method, Scheme, SchemeOutcome, SchemeSpec, SolveOptions, SolverKind, SweepConfig,
};
use edgeprice_core::model::{DualSolution, FollowerSolution, Instance, LeaderDecision};
use edgeprice_core::reform_dual::{build_p2, published_counts_p1, published_counts_p2, verify_bilevel_optimality};
use edgeprice_core::reform_kkt::{build_p1, derive_bigm};
use edgeprice_core::scenario::{sample_instance, ScenarioConfig};
use edgeprice_core::single_level::count_kinds;
use edgeprice_core::CoreError;
use edgeprice_lp::{solve_milp, MilpConfig, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const AGREE: f64 = 1e-6;
const DUALITY: f64 = 1e-7;
const COMPLEMENTARITY: f64 = 1e-5;
const SCHEME_SLACK: f64 = 1e-6;
const TINY_BUDGET: Duration = Duration::from_secs(600);
const DESK_LIMIT: Duration = Duration::from_secs(600);
const TIMING_LIMIT: Duration = Duration::from_secs(15);

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Line {
    id: usize,
    title: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Line {
    fn new(id: usize, title: &'static str, pass: bool, detail: String) -> Self {
        Self { id, title, verdict: if pass { Verdict::Pass } else { Verdict::Fail }, detail }
    }

    fn print(&self) {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        println!("criterion {:>2} [{tag}] {}: {}", self.id, self.title, self.detail);
    }
}

/// A solved bilevel point whose follower problems are re-checked by criterion 5.
struct Solved {
    inst: Instance,
    decision: LeaderDecision,
    followers: Vec<FollowerSolution>,
    duals: Vec<DualSolution>,
}

impl Solved {
    fn from_outcome(inst: &Instance, o: &SchemeOutcome) -> Self {
        Self {
            inst: inst.clone(),
            decision: o.decision.clone(),
            followers: o.followers.clone(),
            duals: o.report.duals.clone(),
        }
    }
}

fn is_infeasible(e: &CoreError) -> bool {
    matches!(e, CoreError::Infeasible(_) | CoreError::NoSolution(Status::Infeasible))
}

fn exact() -> SolveOptions {
    SolveOptions { gap: 0.0, ..SolveOptions::default() }
}

fn solve(inst: &Instance, method: Method) -> Result<SchemeOutcome, CoreError> {
    run_scheme(inst, &SchemeSpec::new(Scheme::Dyn, method), &exact())
}

struct Tiny {
    line1: Line,
    line8: Line,
    bilevel_ok: bool,
    solved: Vec<Solved>,
    instances: Vec<Instance>,
}

fn criterion_1_and_8() -> Tiny {
    let started = Instant::now();
    let (mut agree, mut skipped, mut worst_esc) = (0usize, Vec::new(), 0usize);
    let (mut failures, mut bilevel_ok, mut solved, mut instances) = (Vec::new(), true, Vec::new(), Vec::new());
    let mut seed = 0u64;
    while instances.len() < 20 && seed < 400 {
        let inst = tiny(seed);
        seed += 1;
        let oracle = solve(&inst, Method::Oracle);
        let p1 = solve(&inst, Method::Kkt);
        let p2 = solve(&inst, Method::Dual);
        match (&oracle, &p1, &p2) {
            (Err(a), Err(b), Err(c)) if is_infeasible(a) && is_infeasible(b) && is_infeasible(c) => {
                skipped.push(seed - 1);
                continue;
            }
            (Ok(o), Ok(k), Ok(d)) => {
                if close(o.profit, k.profit, AGREE) && close(o.profit, d.profit, AGREE) {
                    agree += 1;
                } else {
                    failures.push(format!("seed {}: oracle {} kkt {} dual {}", seed - 1, o.profit, k.profit, d.profit));
                }
                for r in [o, k, d] {
                    bilevel_ok &= r.report.bilevel.as_ref().is_some_and(|b| b.passed);
                }
                worst_esc = worst_esc.max(k.report.escalations).max(d.report.escalations);
                solved.push(Solved::from_outcome(&inst, k));
                solved.push(Solved::from_outcome(&inst, d));
            }
            _ => failures.push(format!(
                "seed {}: oracle {:?} kkt {:?} dual {:?}",
                seed - 1,
                oracle.as_ref().map(|o| o.profit),
                p1.as_ref().map(|o| o.profit),
                p2.as_ref().map(|o| o.profit)
            )),
        }
        instances.push(inst);
    }
    let elapsed = started.elapsed();
    let pass = failures.is_empty() && agree == 20 && elapsed < TINY_BUDGET;
    let detail = format!(
        "{agree}/20 tiny instances agree, {:.1} s, infeasible seeds skipped {:?}{}",
        elapsed.as_secs_f64(),
        skipped,
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    let line1 = Line::new(1, "three-way agreement", pass, detail);
    let line8 = Line::new(
        8,
        "big-M soundness",
        failures.is_empty() && worst_esc <= 1,
        format!("clean big-M report on {} instances, most escalations {worst_esc}", agree),
    );
    Tiny { line1, line8, bilevel_ok, solved, instances }
}

fn criterion_2(solved: &mut Vec<Solved>) -> (Line, bool) {
    let (mut matched, mut failures, mut skipped, mut bilevel_ok) = (0usize, Vec::new(), Vec::new(), true);
    let mut seed = 0u64;
    while matched + failures.len() < 10 && seed < 200 {
        let inst = single_en(seed);
        seed += 1;
        let closed = match solve_single_en(&inst) {
            Ok(r) => r,
            Err(e) if is_infeasible(&e) => {
                skipped.push(seed - 1);
                continue;
            }
            Err(e) => {
                failures.push(format!("seed {}: closed form failed: {e}", seed - 1));
                continue;
            }
        };
        let p2 = match solve(&inst, Method::Dual) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("seed {}: P2 failed: {e}", seed - 1));
                continue;
            }
        };
        bilevel_ok &= verify_bilevel_optimality(&inst, &closed.decision, &closed.followers).is_ok_and(|b| b.passed);
        bilevel_ok &= p2.report.bilevel.as_ref().is_some_and(|b| b.passed);
        if close(closed.profit, p2.profit, AGREE) {
            matched += 1;
        } else {
            failures.push(format!("seed {}: closed form {} vs P2 {}", seed - 1, closed.profit, p2.profit));
        }
        solved.push(Solved::from_outcome(&inst, &p2));
    }
    let detail = format!(
        "{matched}/10 single-EN instances match P2, infeasible seeds skipped {skipped:?}{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    (Line::new(2, "single-EN closed form", matched == 10 && failures.is_empty(), detail), bilevel_ok)
}

fn criterion_3() -> Line {
    let base = sample_instance(&ScenarioConfig::sized(0, 10, 4, 6)).expect("base case samples");
    let (m, n, k, v) = (base.m, base.n, base.k, base.v);
    let (p2, _) = build_p2(&base);
    let (p1, _) = build_p1(&base, &derive_bigm(&base)).expect("P1 builds");
    let (b2, c2) = count_kinds(&p2);
    let (b1, c1) = count_kinds(&p1);
    let (t2, t1) = (published_counts_p2(m, n, k, v), published_counts_p1(m, n, k, v));
    let pass = b2 == 48 && b1 == 708 && b2 == t2.binaries && b1 == t1.binaries;
    let delta = |ours: usize, table: usize| ours as i64 - table as i64;
    Line::new(
        3,
        "reformulation size",
        pass,
        format!(
            "binaries P2 {b2} P1 {b1}; continuous P2 {c2} ({:+} vs table) P1 {c1} ({:+}); rows P2 {} ({:+}) P1 {} ({:+})",
            delta(c2, t2.continuous),
            delta(c1, t1.continuous),
            p2.num_rows(),
            delta(p2.num_rows(), t2.constraints),
            p1.num_rows(),
            delta(p1.num_rows(), t1.constraints),
        ),
    )
}

fn criterion_5(solved: &[Solved]) -> Line {
    let (mut lps, mut worst_gap, mut worst_cs, mut failures) = (0usize, 0.0f64, 0.0f64, Vec::new());
    let mut errors = Vec::new();
    let mut check = |what: &str, ctx: &FollowerContext, fs: &FollowerSolution, ds: &DualSolution| {
        let sd = check_strong_duality(fs, ds, ctx);
        let gap = sd.residual / (1.0 + sd.primal.abs());
        let cs = complementarity_residuals(ctx, fs, ds).into_iter().fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        worst_cs = worst_cs.max(cs);
        if gap > DUALITY || cs > COMPLEMENTARITY {
            failures.push(format!("{what} k={}: duality {gap:.2e}, complementarity {cs:.2e}", ctx.k));
        }
    };
    for s in solved {
        for k in 0..s.inst.k {
            let ctx = FollowerContext::new(&s.inst, k, s.decision.price.clone(), s.decision.placement_column(k));
            match solve_follower(&ctx).and_then(|o| o.solved()) {
                Ok((fs, ds)) => {
                    lps += 1;
                    check("re-solve", &ctx, &fs, &ds);
                }
                Err(e) => errors.push(format!("follower k={k} failed: {e}")),
            }
            if let Some(ds) = s.duals.get(k) {
                lps += 1;
                check("reformulation", &ctx, &s.followers[k], ds);
            }
        }
    }
    failures.extend(errors);
    failures.truncate(5);
    Line::new(
        5,
        "strong duality",
        failures.is_empty(),
        format!(
            "{lps} follower primal/dual pairs, worst duality residual {worst_gap:.2e}, worst complementarity {worst_cs:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn desk(seed: u64) -> Instance {
    sample_instance(&ScenarioConfig::sized(seed, 6, 3, 4)).expect("desk scenario samples")
}

fn criterion_6(solved: &mut Vec<Solved>) -> (Line, Option<u64>) {
    let opts = SolveOptions { gap: 1e-4, time_limit: Some(DESK_LIMIT), ..SolveOptions::default() };
    let (mut seeds, mut skipped, mut failures, mut strict) = (Vec::new(), Vec::new(), Vec::new(), false);
    let mut seed = 0u64;
    while seeds.len() < 5 && seed < 100 {
        let inst = desk(seed);
        seed += 1;
        let results = compare_schemes(&inst, Method::Dual, &opts);
        let profit = |s: Scheme| results.iter().find(|r| r.0 == s).and_then(|r| r.1.as_ref().ok()).map(|o| o.profit);
        if let Some((_, Err(e))) = results.iter().find(|r| r.0 == Scheme::Dyn) {
            if is_infeasible(e) {
                skipped.push(seed - 1);
                continue;
            }
        }
        seeds.push(seed - 1);
        match (profit(Scheme::Dyn), profit(Scheme::Flat), profit(Scheme::Avg)) {
            (Some(d), Some(f), Some(a)) => {
                let slack = SCHEME_SLACK * (1.0 + d.abs());
                if d + slack < f || f + slack < a {
                    failures.push(format!("seed {}: dyn {d} flat {f} avg {a}", seed - 1));
                }
                strict |= d > a + slack;
            }
            (d, f, a) => failures.push(format!("seed {}: dyn {d:?} flat {f:?} avg {a:?}", seed - 1)),
        }
        for (_, r) in &results {
            if let Ok(o) = r {
                solved.push(Solved::from_outcome(&inst, o));
            }
        }
    }
    let pass = seeds.len() == 5 && failures.is_empty() && strict;
    let detail = format!(
        "seeds {seeds:?} (infeasible skipped {skipped:?}), dyn > avg on some seed: {strict}{}",
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    (Line::new(6, "scheme dominance", pass, detail), seeds.first().copied())
}

fn criterion_7(seed: Option<u64>, solved: &mut Vec<Solved>) -> Line {
    let Some(seed) = seed else {
        return Line::new(7, "trend checks", false, "no feasible desk-scale seed".into());
    };
    let mut series = Vec::new();
    let mut pass = true;
    for (axis, values) in [(Axis::Rho, vec![1.0, 1.5, 2.0]), (Axis::Lambda, vec![1.0, 2.0])] {
        let mut cfg = SweepConfig::new(ScenarioConfig::sized(seed, 6, 3, 4), axis, values);
        cfg.schemes = vec![Scheme::Dyn];
        cfg.seeds = vec![seed];
        cfg.opts = SolveOptions { gap: 1e-4, time_limit: Some(DESK_LIMIT), ..SolveOptions::default() };
        let profits: Vec<Option<f64>> = match run_sensitivity_sweep(&cfg) {
            Ok(r) => r.series(Scheme::Dyn, seed).iter().map(|row| row.profit).collect(),
            Err(e) => {
                series.push(format!("{axis}: {e}"));
                pass = false;
                continue;
            }
        };
        let ok = profits.iter().all(Option::is_some)
            && profits.windows(2).all(|w| {
                let (a, b) = (w[0].unwrap(), w[1].unwrap());
                b + SCHEME_SLACK * (1.0 + a.abs()) >= a
            });
        pass &= ok;
        let shown: Vec<String> = profits.iter().map(|p| p.map_or("-".into(), |p| format!("{p:.6}"))).collect();
        series.push(format!("{axis} [{}]", shown.join(", ")));
        for &value in &cfg.values {
            let inst = edgeprice_core::harness::sweep_instance(&cfg.base, axis, value, seed).expect("cell instance");
            if let Ok(o) = run_scheme(&inst, &SchemeSpec::new(Scheme::Dyn, Method::Dual), &cfg.opts) {
                solved.push(Solved::from_outcome(&inst, &o));
            }
        }
    }
    Line::new(7, "trend checks", pass, format!("seed {seed}: {}", series.join("; ")))
}

fn criterion_9(tiny: &[Instance]) -> Vec<Line> {
    let mut mismatches = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let bins = 5 + (seed as usize % 6);
        let model = lp_oracle::random_model(&mut rng, bins, 3, 6);
        let truth = lp_oracle::enumerate_milp(&model);
        let got = solve_milp(&model, &MilpConfig { gap_tol: 0.0, ..MilpConfig::default() });
        let ok = match (truth, &got) {
            (None, Ok(s)) => s.status == Status::Infeasible,
            (Some(t), Ok(s)) => s.status == Status::Optimal && (s.objective - t).abs() <= 1e-9 * (1.0 + t.abs()),
            (_, Err(_)) => false,
        };
        if !ok {
            mismatches.push(seed);
        }
    }
    let embedded = Line::new(
        9,
        "solver correctness (embedded)",
        mismatches.is_empty(),
        format!(
            "{}/50 random models match enumeration{}",
            50 - mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!("; mismatched seeds {mismatches:?}") }
        ),
    );
    if !external_solver_available() {
        return vec![
            embedded,
            Line {
                id: 9,
                title: "solver correctness (external)",
                verdict: Verdict::Skip,
                detail: "SKIPPED: no external MILP solver (python3 with highspy) found".into(),
            },
        ];
    }
    let mut compared = Vec::new();
    let mut ok = true;
    for inst in tiny.iter().filter(|i| i.n == 2).take(3) {
        let ours = solve(inst, Method::Dual);
        let spec = SchemeSpec { solver: SolverKind::External, ..SchemeSpec::new(Scheme::Dyn, Method::Dual) };
        let theirs = run_scheme(inst, &spec, &exact());
        match (ours, theirs) {
            (Ok(a), Ok(b)) => {
                ok &= close(a.profit, b.profit, AGREE);
                compared.push(format!("{:.6}/{:.6}", a.profit, b.profit));
            }
            (a, b) => {
                ok = false;
                compared.push(format!("{:?}/{:?}", a.err().map(|e| e.to_string()), b.err().map(|e| e.to_string())));
            }
        }
    }
    ok &= compared.len() == 3;
    vec![
        embedded,
        Line::new(
            9,
            "solver correctness (external)",
            ok,
            format!("MPS round trip through HiGHS, embedded/external profit: {}", compared.join(", ")),
        ),
    ]
}

fn criterion_10() -> Line {
    let rows = match run_timing_benchmark(&small_timing_grid(), &[Method::Dual, Method::Kkt], TIMING_LIMIT, 0) {
        Ok(r) => r,
        Err(e) => return Line::new(10, "duality-vs-KKT timing", false, e.to_string()),
    };
    let limit = TIMING_LIMIT.as_secs_f64();
    let times = |m: Method| -> Vec<f64> {
        rows.iter().filter(|r| r.method == m).map(|r| r.seconds.unwrap_or(limit).min(limit)).collect()
    };
    let (dual, kkt) = (median(&times(Method::Dual)).unwrap(), median(&times(Method::Kkt)).unwrap());
    let cells: Vec<String> = rows
        .chunks(2)
        .map(|c| format!("{}{}{} {}/{}", c[0].m, c[0].n, c[0].k, c[0].seconds_cell(), c[1].seconds_cell()))
        .collect();
    Line::new(
        10,
        "duality-vs-KKT timing",
        dual <= kkt,
        format!(
            "median dual {dual:.2} s vs kkt {kkt:.2} s (limit {limit} s counts as NA); cells mnk dual/kkt: {}",
            cells.join(", ")
        ),
    )
}

fn main() {
    // Under `cargo test -- --list` or a name filter, behave like an empty harness.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    if args.iter().any(|a| !a.starts_with('-')) && !args.iter().any(|a| a == "acceptance") {
        return;
    }
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut solved = Vec::new();

    let tiny = criterion_1_and_8();
    tiny.line1.print();
    let (line2, bilevel2) = criterion_2(&mut solved);
    line2.print();
    let line3 = criterion_3();
    line3.print();
    let line4 = Line::new(
        4,
        "incentive compatibility",
        tiny.bilevel_ok && bilevel2,
        format!(
            "follower re-solves on every criterion 1 and 2 instance {}",
            if tiny.bilevel_ok && bilevel2 { "match" } else { "disagree" }
        ),
    );
    line4.print();
    let (line6, desk_seed) = criterion_6(&mut solved);
    let line7 = criterion_7(desk_seed, &mut solved);
    solved.extend(tiny.solved);
    let line5 = criterion_5(&solved);
    line5.print();
    line6.print();
    line7.print();
    tiny.line8.print();
    let lines9 = criterion_9(&tiny.instances);
    for l in &lines9 {
        l.print();
    }
    let line10 = criterion_10();
    line10.print();

    lines.extend([tiny.line1, line2, line3, line4, line5, line6, line7, tiny.line8]);
    lines.extend(lines9);
    lines.push(line10);
    let failed: Vec<usize> = lines.iter().filter(|l| matches!(l.verdict, Verdict::Fail)).map(|l| l.id).collect();
    println!("acceptance finished in {:.1} s; failed criteria: {failed:?}", started.elapsed().as_secs_f64());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
