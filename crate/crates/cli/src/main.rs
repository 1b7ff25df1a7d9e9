use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cuboid_inspect::bench::{run_bench, table_csv, BenchSpec};
use cuboid_inspect::controller::{run_mission_with, run_step, ControllerError, InspectionMemory, MissionStatus};
use cuboid_inspect::formulation::build;
use cuboid_inspect::milp::lp_format::write_lp;
use cuboid_inspect::scenario::{load_scenario, write_log, PointSpec, ScenarioError, ScenarioFile};
use cuboid_inspect::validate::{validate, LogView, ValidateOptions};

/// Exit status of every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Exit {
    Ok = 0,
    Io = 1,
    Config = 2,
    Infeasible = 3,
    Timeout = 4,
    Invalid = 5,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

const OUT_ENV: &str = "CUBOID_INSPECT_OUT";

#[derive(Parser)]
#[command(name = "cuboid-inspect", version, about = "Receding-horizon inspection planning around a cuboid")]
#[command(after_help = "Exit codes: 0 ok, 1 I/O error, 2 configuration error, 3 planning infeasible, 4 timeout, 5 validation failure")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fly a mission and write its logs.
    Run {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, env = OUT_ENV, default_value = "out")]
        out: PathBuf,
        /// Overrides `points.seed` of uniformly sampled scenarios.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress per-step progress lines.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Mean solve time per (point count, horizon) cell over seeded random scatters.
    Bench {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "12,20,32")]
        points: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "3,8,15")]
        horizons: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for `bench.csv` and `bench.json`.
        #[arg(long, env = OUT_ENV, default_value = "out")]
        out: PathBuf,
    },
    /// Replay every invariant against a log directory written by `run`.
    Validate {
        log_dir: PathBuf,
        /// Also compare each plan against exhaustive bang-off-bang search (horizon <= 3).
        #[arg(long)]
        grid_check: bool,
    },
    /// Write the planning model of a given mission step in LP format.
    DumpModel {
        scenario: PathBuf,
        /// Mission steps to fly before building the model.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Destination file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn scenario_exit(e: &ScenarioError) -> Exit {
    match e {
        ScenarioError::Io { .. } => Exit::Io,
        _ => Exit::Config,
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioFile, Exit> {
    let mut sc = load_scenario(path).map_err(|e| {
        eprintln!("error: {e}");
        scenario_exit(&e)
    })?;
    if let (Some(s), PointSpec::Uniform { seed, .. }) = (seed, &mut sc.points) {
        *seed = s;
    }
    Ok(sc)
}

fn cmd_run(scenario: &Path, out: &Path, seed: Option<u64>, quiet: bool) -> Result<Exit, Exit> {
    let sc = load(scenario, seed)?;
    let cfg = sc.to_mission_config().map_err(|errs| {
        eprintln!("error: invalid scenario:\n  {}", errs.join("\n  "));
        Exit::Config
    })?;
    let log = run_mission_with(&cfg, |r| {
        if !quiet {
            println!(
                "t={:>3} p=({:.2}, {:.2}, {:.2}) inspected={}/{} nodes={} solve={:.3}s",
                r.t,
                r.state.p.x,
                r.state.p.y,
                r.state.p.z,
                r.inspected_total,
                cfg.points.len(),
                r.nodes,
                r.solve_time
            );
        }
    })
    .map_err(|e| {
        eprintln!("error: {e}");
        match e {
            ControllerError::BadConfig(_) => Exit::Config,
            _ => Exit::Infeasible,
        }
    })?;
    write_log(&log, &sc, &cfg, out).map_err(|e| {
        eprintln!("error: {e}");
        scenario_exit(&e)
    })?;
    println!("{:?}: {} steps, {}/{} points inspected, logs in {}", log.status, log.steps(), log.inspected(), log.total_points, out.display());
    Ok(match log.status {
        MissionStatus::Complete => Exit::Ok,
        MissionStatus::Timeout => Exit::Timeout,
        MissionStatus::Infeasible => {
            eprintln!("aborted: {}", log.abort_reason.as_deref().unwrap_or("planning infeasible"));
            Exit::Infeasible
        }
    })
}

fn cmd_bench(scenario: &Path, spec: BenchSpec, out: &Path) -> Result<Exit, Exit> {
    let sc = load(scenario, None)?;
    let rows = run_bench(&sc, &spec, |n, h, o| {
        let status = o.status.map(|s| format!("{s:?}")).unwrap_or_else(|| "error".into());
        eprintln!("points={n} horizon={h} seed={} {status} steps={}", o.seed, o.steps);
    })
    .map_err(|e| {
        eprintln!("error: {e}");
        Exit::Config
    })?;
    fs::create_dir_all(out).map_err(|e| {
        eprintln!("error: {}: {e}", out.display());
        Exit::Io
    })?;
    let table = table_csv(&rows);
    let write = |name: &str, text: &str| {
        let p = out.join(name);
        fs::write(&p, text).map_err(|e| {
            eprintln!("error: {}: {e}", p.display());
            Exit::Io
        })
    };
    write("bench.csv", &table)?;
    write("bench.json", &serde_json::to_string_pretty(&rows).expect("bench rows serialize"))?;
    print!("{table}");
    Ok(Exit::Ok)
}

fn cmd_validate(dir: &Path, grid_check: bool) -> Result<Exit, Exit> {
    let (sc, view) = LogView::load(dir).map_err(|e| {
        eprintln!("error: {e}");
        scenario_exit(&e)
    })?;
    let cfg = sc.to_mission_config().map_err(|errs| {
        eprintln!("error: invalid scenario:\n  {}", errs.join("\n  "));
        Exit::Config
    })?;
    if grid_check && cfg.horizon > cuboid_inspect::oracle::MAX_GRID_HORIZON {
        eprintln!("warning: grid check skipped, horizon {} exceeds {}", cfg.horizon, cuboid_inspect::oracle::MAX_GRID_HORIZON);
    }
    let report = validate(&cfg, &view, ValidateOptions { grid_check });
    for c in &report.checks {
        if c.passed() {
            println!("PASS {:<18} ({} checked)", c.name, c.checked);
        } else {
            println!("FAIL {:<18} steps {:?}", c.name, c.steps());
            for v in &c.violations {
                println!("     t={}: {}", v.t, v.detail);
            }
        }
    }
    Ok(if report.passed() { Exit::Ok } else { Exit::Invalid })
}

fn cmd_dump(scenario: &Path, steps: usize, out: Option<&Path>) -> Result<Exit, Exit> {
    let sc = load(scenario, None)?;
    let cfg = sc.to_mission_config().map_err(|errs| {
        eprintln!("error: invalid scenario:\n  {}", errs.join("\n  "));
        Exit::Config
    })?;
    let mut mem = InspectionMemory::new();
    let mut state = cfg.start;
    for t in 1..=steps {
        match run_step(&cfg, &mut mem, &state, t) {
            Ok(r) => state = r.state,
            Err(ControllerError::MissionComplete) => {
                eprintln!("error: mission completes before step {steps}");
                return Err(Exit::Config);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return Err(Exit::Infeasible);
            }
        }
    }
    let inst = cfg.instance(&mem, state);
    let (model, _) = build(&inst).map_err(|e| {
        eprintln!("error: {e}");
        Exit::Infeasible
    })?;
    let text = write_lp(&model);
    match out {
        Some(p) => fs::write(p, text).map_err(|e| {
            eprintln!("error: {}: {e}", p.display());
            Exit::Io
        })?,
        None => print!("{text}"),
    }
    Ok(Exit::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Run { scenario, out, seed, quiet } => cmd_run(&scenario, &out, seed, quiet),
        Command::Bench { scenario, points, horizons, trials, seed, out } => {
            cmd_bench(&scenario, BenchSpec { points, horizons, trials, seed }, &out)
        }
        Command::Validate { log_dir, grid_check } => cmd_validate(&log_dir, grid_check),
        Command::DumpModel { scenario, step, out } => cmd_dump(&scenario, step, out.as_deref()),
    };
    result.unwrap_or_else(|e| e).into()
}
