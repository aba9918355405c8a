use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use edgeprice_core::harness::{
    exit_code, run_scheme, run_sensitivity_sweep, run_timing_benchmark, small_timing_grid, sweep_csv_path, table1_grid,
    write_timing_csv, Axis, Method, Scheme, SchemeSpec, SolveOptions, SolveReport, SweepConfig,
};
use edgeprice_core::model::Instance;
use edgeprice_core::par::Execution;
use edgeprice_core::scenario::{sample_instance, ScenarioConfig};
use edgeprice_core::CoreError;

const USAGE_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "edgeprice", version, about = "Exact pricing and placement for edge resources")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a seeded instance and write it as JSON.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Scenario configuration (JSON); sizes and seed on the command line win.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance and print a JSON report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "dual")]
        method: String,
        #[arg(long, default_value = "dyn")]
        scheme: String,
        #[arg(long, default_value = "embedded")]
        solver: String,
        /// Write the single-level model in MPS format.
        #[arg(long)]
        mps_out: Option<PathBuf>,
        /// Read `name value` lines instead of solving.
        #[arg(long)]
        import_solution: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sensitivity sweep over one scaling or size axis; writes CSV and artifacts.
    Sweep {
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "dyn,flat,avg")]
        schemes: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "dual")]
        method: String,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
        #[arg(long)]
        time_limit: Option<f64>,
        /// Run cells one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Reformulation timing table; "NA" marks a time-limit hit.
    Bench {
        #[arg(long, value_enum, default_value = "table1")]
        grid: Grid,
        /// Seconds per solve.
        #[arg(long, default_value_t = 600.0)]
        time_limit: f64,
        #[arg(long, value_delimiter = ',', default_value = "dual,kkt")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Table1,
    Small,
}

fn seconds(t: Option<f64>) -> Result<Option<Duration>, CoreError> {
    t.map(|s| {
        Duration::try_from_secs_f64(s)
            .map_err(|_| CoreError::InvalidArgument(format!("time limit must be a non-negative number, got {s}")))
    })
    .transpose()
}

fn parse_list<T: std::str::FromStr<Err = CoreError>>(items: &[String]) -> Result<Vec<T>, CoreError> {
    items.iter().map(|s| s.trim().parse()).collect()
}

fn usage(err: CoreError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(USAGE_ERROR)
}

fn failure(err: CoreError) -> ExitCode {
    eprintln!("error: {err}");
    let code = exit_code(&Err(err));
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Cmd::Gen { seed, m, n, k, config, out } => {
            let mut cfg = match config {
                Some(path) => match std::fs::read_to_string(&path)
                    .map_err(CoreError::from)
                    .and_then(|t| serde_json::from_str::<ScenarioConfig>(&t).map_err(CoreError::from))
                {
                    Ok(c) => c,
                    Err(e) => return usage(e),
                },
                None => ScenarioConfig::default(),
            };
            cfg.seed = seed;
            cfg.m = m;
            cfg.n = n;
            cfg.k = k;
            if let Err(e) = cfg.validate() {
                return usage(e);
            }
            match sample_instance(&cfg).and_then(|inst| inst.save(&out)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => failure(e),
            }
        }
        Cmd::Solve { instance, method, scheme, solver, mps_out, import_solution, gap, time_limit, report } => {
            let parsed = (|| {
                let spec = SchemeSpec { scheme: scheme.parse()?, method: method.parse()?, solver: solver.parse()? };
                if !(gap >= 0.0) {
                    return Err(CoreError::InvalidArgument(format!("gap must be non-negative, got {gap}")));
                }
                Ok((spec, seconds(time_limit)?))
            })();
            let (spec, time_limit) = match parsed {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let inst = match Instance::load(&instance) {
                Ok(i) => i,
                Err(e) => return usage(e),
            };
            let opts = SolveOptions { gap, time_limit, mps_out, import_solution, ..SolveOptions::default() };
            let outcome = run_scheme(&inst, &spec, &opts);
            let rep = match &outcome {
                Ok(o) => o.report.clone(),
                Err(e) => SolveReport::failure(&inst, &spec, e),
            };
            let json = rep.to_json();
            println!("{json}");
            if let Some(path) = report {
                if let Err(e) = std::fs::write(&path, json + "\n") {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            if let Err(e) = &outcome {
                eprintln!("error: {e}");
            }
            ExitCode::from(exit_code(&outcome) as u8)
        }
        Cmd::Sweep { axis, values, schemes, seeds, out, method, m, n, k, gap, time_limit, sequential } => {
            let parsed = (|| {
                let axis: Axis = axis.parse()?;
                let schemes: Vec<Scheme> = parse_list(&schemes)?;
                let method: Method = method.parse()?;
                Ok((axis, schemes, method, seconds(time_limit)?))
            })();
            let (axis, schemes, method, time_limit) = match parsed {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let mut cfg = SweepConfig::new(ScenarioConfig::sized(0, m, n, k), axis, values);
            cfg.schemes = schemes;
            cfg.seeds = seeds;
            cfg.method = method;
            cfg.opts = SolveOptions { gap, time_limit, ..SolveOptions::default() };
            cfg.exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            cfg.out_dir = Some(out.clone());
            match run_sensitivity_sweep(&cfg) {
                Ok(res) => {
                    let failed = res.rows.iter().filter(|r| r.profit.is_none()).count();
                    eprintln!(
                        "{} rows written to {} ({failed} without a solution)",
                        res.rows.len(),
                        sweep_csv_path(&out, axis).display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e @ (CoreError::InvalidArgument(_) | CoreError::InvalidInstance(_))) => usage(e),
                Err(e) => failure(e),
            }
        }
        Cmd::Bench { grid, time_limit, methods, seed, out } => {
            let parsed = (|| Ok((parse_list::<Method>(&methods)?, seconds(Some(time_limit))?.unwrap_or_default())))();
            let (methods, limit) = match parsed {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let cells = match grid {
                Grid::Table1 => table1_grid(),
                Grid::Small => small_timing_grid(),
            };
            let rows = match run_timing_benchmark(&cells, &methods, limit, seed) {
                Ok(r) => r,
                Err(e @ CoreError::InvalidArgument(_)) => return usage(e),
                Err(e) => return failure(e),
            };
            println!("{:>3} {:>3} {:>3}  {:<6} {:>12} {:>10}", "M", "N", "K", "method", "seconds", "status");
            for r in &rows {
                println!("{:>3} {:>3} {:>3}  {:<6} {:>12} {:>10}", r.m, r.n, r.k, r.method, r.seconds_cell(), r.status);
            }
            if let Some(path) = out {
                if let Err(e) = write_timing_csv(&rows, &path) {
                    return failure(e);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
