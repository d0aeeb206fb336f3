//! `exorecover`: run push-recovery scenarios, one-shot plans and weight
//! sweeps.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 when the
//! step planner reports infeasibility.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use exorecover_core::kinematics::Side;
use exorecover_core::lipm::{CopPoint, DcmPoint};
use exorecover_core::output::{write_atomic, write_run};
use exorecover_core::planner::{constraint_name, plan_step, PlannerError};
use exorecover_core::qp::QpSolver;
use exorecover_core::scenario::{parse_scenario, ScenarioConfig};
use exorecover_core::sim::run_scenario;
use exorecover_core::sweep::{parse_grid, parse_side, request_input, sweep_csv, sweep_row, PlanRequest};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULTS_HELP: &str = "\
Scenario defaults (angles in degrees, lengths in metres):
  lipm.gravity = 9.81            lipm.mass = 80
  geometry.hip_height = 0.92*(l2+l3)
  geometry.joint_limits = [[-20, 20], [-20, 100], [0, 120]]
  nominal.cop_t = [0, 0.2]       nominal.gamma = [0, 0]
  nominal.duration = 0.8         nominal.weights = [1, 1, 1]
  bounds.mode = explicit         bounds.cop_min = [-0.2, 0.1]
  bounds.cop_max = [0.5, 0.5]    bounds.t_min = 0.2    bounds.t_max = 1.0
  bounds.remaining_floor = 0.1   bounds.workspace_margin = 0.02
  detector.semi_axis_x = 0.05    detector.semi_axis_y = 0.05
  detector.debounce = 2          detector.capture_tolerance = 0.02
  detector.capture_hold = 0.2    detector.multi_step = false
  detector.max_steps = 3
  swing.peak_height = 0.07       swing.peak_fraction = 0.4
  swing.touchdown_height = 0.001
  control.mode = assist          control.stiffness = [1.5, 0.4, 0.4] (N m/deg)
  control.damping = [0, 0, 0]    control.kp = 0.5
  plant.inertia = [0.01; 3]      plant.damping = [0.2; 3]
  human.noise_std = [0, 0, 0]    estimation.attitude_noise = 0
  estimation.rate_noise = 0      estimation.pendulum_length = lipm.com_height
  ankle.half_extents = [0.1, 0.05]
  sim.dt = 0.001                 sim.duration = 3.0    sim.seed = 0
Required: lipm.com_height, geometry.l0, geometry.l1, geometry.l2, geometry.l3.
Step targets and bounds are relative to the stance foot, for a left swing.
EXORECOVER_THREADS caps the sweep worker pool.";

#[derive(Parser)]
#[command(name = "exorecover", version, about = "Push-recovery step planning and simulation", after_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Override a scenario key, e.g. `--set nominal.weights=[1,1,10]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario and write trace.csv, events.csv and summary.toml.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write plot.gp for gnuplot.
        #[arg(long)]
        emit_gnuplot: bool,
    },
    /// Solve one step plan and print it.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Initial DCM, `x,y`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        xi0: [f64; 2],
        /// Stance foot centre, `x,y`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        cop0: [f64; 2],
        /// Swing leg, `left` or `right`; chosen from the DCM offset by default.
        #[arg(long, value_parser = parse_side_arg)]
        side: Option<Side>,
    },
    /// Plan once per weight triple of a grid file and write sweep.csv.
    SweepWeights {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y, got `{s}`"));
    }
    let v = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    let pair = [v(parts[0])?, v(parts[1])?];
    if pair.iter().all(|x| x.is_finite()) {
        Ok(pair)
    } else {
        Err(format!("non-finite value in `{s}`"))
    }
}

fn parse_side_arg(s: &str) -> Result<Side, String> {
    parse_side(s).ok_or_else(|| format!("expected `left` or `right`, got `{s}`"))
}

/// What to run, resolved from the command line.
#[derive(Debug)]
struct RunManifest {
    scenario_path: PathBuf,
    output_dir: Option<PathBuf>,
    overrides: Vec<String>,
}

enum Failure {
    Config(anyhow::Error),
    Infeasible(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

fn load(m: &RunManifest) -> Result<ScenarioConfig, Failure> {
    let cfg = parse_scenario(&m.scenario_path, &m.overrides)
        .map_err(|e| anyhow!("{}: {e}", m.scenario_path.display()))?;
    Ok(cfg)
}

fn writable_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let probe = dir.join(".exorecover-probe");
    std::fs::write(&probe, b"").with_context(|| format!("{} is not writable", dir.display()))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

fn cmd_simulate(m: &RunManifest, gnuplot: bool) -> Outcome {
    let cfg = load(m)?;
    cfg.check_bounds()
        .map_err(|e| anyhow!("{}: {e}", m.scenario_path.display()))?;
    let out = m.output_dir.as_deref().expect("simulate has an output dir");
    writable_dir(out)?;
    let trace = run_scenario(&cfg).map_err(|e| anyhow!("{e}"))?;
    let summary = write_run(out, &trace, &cfg, gnuplot).context("writing run outputs")?;
    println!(
        "step_taken = {}, captured = {}, events = {}",
        summary.step_taken,
        summary.captured,
        trace.events.len()
    );
    if summary.aborted {
        return Err(Failure::Infeasible("the step planner failed during the run (see events.csv)".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanRecord {
    status: String,
    side: &'static str,
    cop_t: [f64; 2],
    duration: f64,
    sigma: f64,
    gamma_t: [f64; 2],
    objective: f64,
    active: Vec<&'static str>,
    terminal: bool,
}

#[derive(Serialize)]
struct PlanOutput {
    plan: PlanRecord,
}

fn infeasible(e: &PlannerError) -> Failure {
    match e {
        PlannerError::Infeasible { violated } => {
            Failure::Infeasible(format!("step plan infeasible; violated constraints: {}", violated.join(", ")))
        }
        PlannerError::IterationLimit => Failure::Infeasible("step planner hit its iteration limit".into()),
        PlannerError::InvalidInput(s) => Failure::Config(anyhow!("invalid planner input: {s}")),
    }
}

fn cmd_plan(m: &RunManifest, req: PlanRequest) -> Outcome {
    let cfg = load(m)?;
    let (side, input) = request_input(&cfg, &req).map_err(|e| anyhow!(e))?;
    let plan = plan_step(&input, &QpSolver::default()).map_err(|e| infeasible(&e))?;
    let record = PlanOutput {
        plan: PlanRecord {
            status: plan.status.to_string(),
            side: side.as_str(),
            cop_t: [plan.cop_t.x, plan.cop_t.y],
            duration: plan.duration,
            sigma: plan.sigma,
            gamma_t: [plan.gamma_t.x, plan.gamma_t.y],
            objective: plan.objective,
            active: plan.active_set.iter().map(|&i| constraint_name(i)).collect(),
            terminal: plan.terminal,
        },
    };
    print!("{}", toml::to_string(&record).expect("plan serializes"));
    Ok(())
}

fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var("EXORECOVER_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(anyhow!("EXORECOVER_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn cmd_sweep(m: &RunManifest, grid_path: &Path) -> Outcome {
    let cfg = load(m)?;
    let text = std::fs::read_to_string(grid_path).with_context(|| format!("cannot read {}", grid_path.display()))?;
    let grid = parse_grid(&text).map_err(|e| anyhow!("{}: {e}", grid_path.display()))?;
    let (_, input) = request_input(&cfg, &grid.request).map_err(|e| anyhow!(e))?;
    let out = m.output_dir.as_deref().expect("sweep has an output dir");
    writable_dir(out)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting the worker pool")?;
    let rows: Vec<_> = pool.install(|| grid.weights.par_iter().map(|w| sweep_row(&input, *w)).collect());

    let table = sweep_csv(&rows, &input);
    write_atomic(&out.join("sweep.csv"), &table).context("writing sweep.csv")?;
    print!("{table}");
    let failed: Vec<String> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.plan.as_ref().err().map(|e| format!("row {i}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Infeasible(failed.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let manifest = |s: &ScenarioArgs, out: Option<&PathBuf>| RunManifest {
        scenario_path: s.scenario.clone(),
        output_dir: out.cloned(),
        overrides: s.overrides.clone(),
    };
    let outcome = match &cli.command {
        Command::Simulate {
            scenario,
            out,
            emit_gnuplot,
        } => cmd_simulate(&manifest(scenario, Some(out)), *emit_gnuplot),
        Command::Plan {
            scenario,
            xi0,
            cop0,
            side,
        } => cmd_plan(
            &manifest(scenario, None),
            PlanRequest {
                xi0: DcmPoint::new(xi0[0], xi0[1]),
                cop0: CopPoint::new(cop0[0], cop0[1]),
                side: *side,
            },
        ),
        Command::SweepWeights { scenario, grid, out } => cmd_sweep(&manifest(scenario, Some(out)), grid),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
    }
}
