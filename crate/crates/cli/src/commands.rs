use std::path::Path;

use nmpc_core::{run_scenario, Outcome, RunMetrics, Scenario, TrajectoryLog};

use crate::error::{CliError, Result};
use crate::plot::trajectory_svg;
use crate::report;
use crate::scenario_file::{load_scenario, LoadedScenario};
use crate::sweep::{aggregate, load_sweep, run_sweep, worst_outcome, CellAggregate, TableRow};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_TIMEOUT: u8 = 2;
pub const EXIT_COLLISION: u8 = 3;

pub fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Success => EXIT_SUCCESS,
        Outcome::Timeout => EXIT_TIMEOUT,
        Outcome::Collision => EXIT_COLLISION,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub log: TrajectoryLog,
    pub metrics: RunMetrics,
}

/// Runs a loaded scenario, optionally with a different noise seed.
pub fn simulate(loaded: &LoadedScenario, seed: Option<u64>) -> Result<RunOutput> {
    let mut scenario = loaded.scenario.clone();
    if let Some(seed) = seed {
        scenario.noise.seed = seed;
    }
    let log = run_scenario(&scenario, &loaded.solver)?;
    let metrics = RunMetrics::compute(
        &log,
        &scenario.planned_path(),
        &scenario.target(),
        &scenario.obstacles,
    );
    Ok(RunOutput {
        scenario,
        log,
        metrics,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `<stem>_log.csv`, `<stem>_metrics.csv` and `<stem>_traj.svg`.
fn write_artifacts(out: &Path, stem: &str, run: &RunOutput) -> Result<()> {
    report::write_log(&out.join(format!("{stem}_log.csv")), &run.log)?;
    report::write_metrics(
        &out.join(format!("{stem}_metrics.csv")),
        &run.scenario.name,
        run.scenario.noise.seed,
        &run.metrics,
    )?;
    let svg_path = out.join(format!("{stem}_traj.svg"));
    std::fs::write(&svg_path, trajectory_svg(&run.scenario, &run.log))
        .map_err(|e| CliError::io(svg_path, e))
}

fn summary(name: &str, m: &RunMetrics) -> String {
    let clearance = m
        .min_obstacle_distance
        .map(|d| format!(" clearance={d:.3}m"))
        .unwrap_or_default();
    format!(
        "{name}: {} after {:.2}s, position error {:.3}m, heading error {:.3}rad, max solve {:.4}s{clearance}",
        m.outcome, m.total_time, m.euclidean_position_error, m.rotation_error, m.max_solve_time
    )
}

pub fn cmd_run(scenario_file: &Path, seed: Option<u64>, out: &Path) -> Result<Outcome> {
    let loaded = load_scenario(scenario_file)?;
    let run = simulate(&loaded, seed)?;
    ensure_dir(out)?;
    write_artifacts(out, &loaded.scenario.name, &run)?;
    println!("{}", summary(&loaded.scenario.name, &run.metrics));
    Ok(run.metrics.outcome)
}

/// Runs `trials` seeds (scenario seed + i) and writes per-trial artifacts plus
/// `waypoint_metrics.csv`. Returns the worst outcome.
pub fn cmd_waypoints(scenario_file: &Path, out: &Path, trials: usize) -> Result<Outcome> {
    let loaded = load_scenario(scenario_file)?;
    ensure_dir(out)?;
    let name = &loaded.scenario.name;
    let mut rows = Vec::with_capacity(trials);
    for i in 0..trials.max(1) {
        let seed = loaded.scenario.noise.seed.wrapping_add(i as u64);
        let run = simulate(&loaded, Some(seed))?;
        let stem = if trials <= 1 {
            name.clone()
        } else {
            format!("{name}_trial{}", i + 1)
        };
        write_artifacts(out, &stem, &run)?;
        println!("{}", summary(&stem, &run.metrics));
        rows.push((seed, run.metrics));
    }
    report::write_waypoint_metrics(&out.join("waypoint_metrics.csv"), &rows)?;
    Ok(worst_outcome(rows.iter().map(|(_, m)| m.outcome)))
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<TableRow>,
    pub cells: Vec<CellAggregate>,
}

/// Writes `sweep.csv` and `sweep_aggregate.csv`. Failed runs are recorded as
/// rows; only configuration and I/O problems are errors.
pub fn cmd_sweep(sweep_file: &Path, out: &Path, jobs: usize) -> Result<SweepOutput> {
    let spec = load_sweep(sweep_file)?;
    let rows = run_sweep(&spec, jobs)?;
    let cells = aggregate(&rows, &spec.base.criteria);
    ensure_dir(out)?;
    report::write_sweep(&out.join("sweep.csv"), &rows)?;
    report::write_aggregate(&out.join("sweep_aggregate.csv"), &cells)?;
    for c in &cells {
        println!(
            "dt={} N={}: {}/{} success, mean error {:.3}m, worst error {:.3}m, pass mean={} worst={}",
            c.dt, c.horizon, c.successes, c.runs, c.mean.euclidean_error, c.worst.euclidean_error, c.pass_mean, c.pass_worst
        );
    }
    Ok(SweepOutput { rows, cells })
}
