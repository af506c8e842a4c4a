//! Sampling-time × horizon sweeps over a base scenario.
//!
//! ```toml
//! base = "obstacle_free_straight.toml"   # relative to this file
//! dt_values_s = [0.1, 0.5]
//! horizon_values = [10, 20]
//! trials_per_cell = 3
//! seeds = [0, 1, 2]                      # optional, one per trial
//!
//! [[targets]]                            # optional, replaces the base plan
//! x_m = 1.5
//! y_m = 1.5
//! theta_rad = 0.0
//! ```

use std::path::{Path, PathBuf};

use nmpc_core::{run_scenario, Outcome, Pose, RunMetrics, Scenario, SolverConfig, WaypointPlan};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, Location, Result};
use crate::scenario_file::{key_line, load_scenario, toml_error, PoseEntry, SolverEntry};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub base: PathBuf,
    pub dt_values_s: Vec<f64>,
    pub horizon_values: Vec<usize>,
    #[serde(default = "one")]
    pub trials_per_cell: usize,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub targets: Vec<PoseEntry>,
}

/// A validated sweep with its base scenario loaded.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub solver: SolverEntry,
    pub dt_values: Vec<f64>,
    pub horizon_values: Vec<usize>,
    pub trials_per_cell: usize,
    /// One seed per trial.
    pub seeds: Vec<u64>,
    /// Each target is run separately in every cell; defaults to the base
    /// scenario's final waypoint.
    pub targets: Vec<Pose>,
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: SweepFile = toml::from_str(&src).map_err(|e| toml_error(&src, path, &e))?;
    let fail = |key: &str, message: String| CliError::Config {
        at: Location {
            path: path.to_path_buf(),
            line: key_line(&src, None, 0, key),
        },
        message: format!("{key}: {message}"),
    };
    if file.dt_values_s.is_empty() {
        return Err(fail("dt_values_s", "list must not be empty".into()));
    }
    if let Some(dt) = file
        .dt_values_s
        .iter()
        .find(|dt| !(**dt > 0.0 && dt.is_finite()))
    {
        return Err(fail(
            "dt_values_s",
            format!("sampling times must be positive, got {dt}"),
        ));
    }
    if file.horizon_values.is_empty() || file.horizon_values.contains(&0) {
        return Err(fail(
            "horizon_values",
            "list must be nonempty with horizons of at least 1".into(),
        ));
    }
    if file.trials_per_cell == 0 {
        return Err(fail("trials_per_cell", "must be at least 1".into()));
    }
    if !file.seeds.is_empty() && file.seeds.len() != file.trials_per_cell {
        return Err(fail(
            "seeds",
            format!(
                "has {} entries, trials_per_cell is {}",
                file.seeds.len(),
                file.trials_per_cell
            ),
        ));
    }
    if file.targets.iter().any(|t| !Pose::from(*t).is_finite()) {
        return Err(fail("targets", "targets must be finite".into()));
    }

    let base_path = path.parent().unwrap_or(Path::new(".")).join(&file.base);
    let loaded = load_scenario(&base_path)?;
    let base = loaded.scenario;
    let seeds = if file.seeds.is_empty() {
        (0..file.trials_per_cell as u64)
            .map(|t| base.noise.seed.wrapping_add(t))
            .collect()
    } else {
        file.seeds
    };
    let targets = if file.targets.is_empty() {
        vec![base.target()]
    } else {
        file.targets.into_iter().map(Pose::from).collect()
    };
    Ok(SweepSpec {
        solver: loaded.file.solver.unwrap_or_default(),
        base,
        dt_values: file.dt_values_s,
        horizon_values: file.horizon_values,
        trials_per_cell: file.trials_per_cell,
        seeds,
        targets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassFlags {
    /// Finished inside the simulated time limit.
    pub time: bool,
    /// Every solve took less than one sampling interval.
    pub solve_time: bool,
    pub euclidean: bool,
    pub rotation: bool,
    /// All of the above and the run succeeded.
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dt: f64,
    pub horizon: usize,
    /// Index into the sweep's targets.
    pub target: usize,
    pub trial: usize,
    pub seed: u64,
    pub total_time: f64,
    pub max_solve_time: f64,
    pub euclidean_error: f64,
    pub rotation_error: f64,
    pub outcome: Outcome,
    pub flags: PassFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValues {
    pub total_time: f64,
    pub max_solve_time: f64,
    pub euclidean_error: f64,
    pub rotation_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub dt: f64,
    pub horizon: usize,
    pub mean: CellValues,
    pub worst: CellValues,
    /// Worst outcome in the cell: collision, then timeout, then success.
    pub outcome: Outcome,
    pub runs: usize,
    pub successes: usize,
    pub timeouts: usize,
    pub collisions: usize,
    /// The cell means meet every threshold and every run succeeded.
    pub pass_mean: bool,
    /// Every run in the cell passes every criterion.
    pub pass_worst: bool,
}

#[derive(Debug, Clone)]
struct Job {
    dt: f64,
    horizon: usize,
    target: usize,
    trial: usize,
}

impl SweepSpec {
    pub fn cell_scenario(&self, dt: f64, horizon: usize, target: usize, trial: usize) -> Scenario {
        let mut s = self.base.clone();
        s.dt = dt;
        s.horizon = horizon;
        s.plan = WaypointPlan::single(self.targets[target]);
        s.noise.seed = self.seeds[trial];
        s
    }

    pub fn cell_solver(&self, dt: f64) -> SolverConfig {
        self.solver.resolve(dt)
    }

    fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for &dt in &self.dt_values {
            for &horizon in &self.horizon_values {
                for target in 0..self.targets.len() {
                    for trial in 0..self.trials_per_cell {
                        jobs.push(Job {
                            dt,
                            horizon,
                            target,
                            trial,
                        });
                    }
                }
            }
        }
        jobs
    }
}

pub fn flags(m: &RunMetrics, dt: f64, criteria: &nmpc_core::TerminationCriteria) -> PassFlags {
    let time = m.outcome != Outcome::Timeout && m.total_time <= criteria.max_wall_time;
    let solve_time = m.max_solve_time < dt;
    let euclidean = m.euclidean_position_error <= criteria.pos_tol;
    let rotation = m.rotation_error <= criteria.rot_tol;
    PassFlags {
        time,
        solve_time,
        euclidean,
        rotation,
        all: time && solve_time && euclidean && rotation && m.outcome == Outcome::Success,
    }
}

fn run_job(spec: &SweepSpec, job: &Job) -> TableRow {
    let scn = spec.cell_scenario(job.dt, job.horizon, job.target, job.trial);
    let metrics = match run_scenario(&scn, &spec.cell_solver(job.dt)) {
        Ok(log) => RunMetrics::compute(&log, &scn.planned_path(), &scn.target(), &scn.obstacles),
        // A cell that cannot run is recorded as a failed row.
        Err(_) => RunMetrics {
            euclidean_position_error: f64::NAN,
            rotation_error: f64::NAN,
            max_trajectory_error: f64::NAN,
            avg_trajectory_error: f64::NAN,
            min_obstacle_distance: None,
            total_time: 0.0,
            max_solve_time: 0.0,
            outcome: Outcome::Timeout,
        },
    };
    TableRow {
        dt: job.dt,
        horizon: job.horizon,
        target: job.target,
        trial: job.trial,
        seed: scn.noise.seed,
        total_time: metrics.total_time,
        max_solve_time: metrics.max_solve_time,
        euclidean_error: metrics.euclidean_position_error,
        rotation_error: metrics.rotation_error,
        outcome: metrics.outcome,
        flags: flags(&metrics, job.dt, &scn.criteria),
    }
}

/// Runs every (dt, N, target, trial) combination on `jobs` threads. Rows come
/// back sorted by dt, N, target and trial whatever the completion order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<TableRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config {
            at: Location {
                path: PathBuf::from("--jobs"),
                line: None,
            },
            message: e.to_string(),
        })?;
    let mut rows: Vec<TableRow> =
        pool.install(|| spec.jobs().par_iter().map(|j| run_job(spec, j)).collect());
    rows.sort_by(|a, b| {
        a.dt.total_cmp(&b.dt)
            .then(a.horizon.cmp(&b.horizon))
            .then(a.target.cmp(&b.target))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

fn severity(o: Outcome) -> u8 {
    match o {
        Outcome::Success => 0,
        Outcome::Timeout => 1,
        Outcome::Collision => 2,
    }
}

pub fn worst_outcome(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
    outcomes
        .into_iter()
        .max_by_key(|o| severity(*o))
        .unwrap_or(Outcome::Success)
}

/// Groups sorted rows by (dt, N) and summarizes each cell by mean and worst.
pub fn aggregate(
    rows: &[TableRow],
    criteria: &nmpc_core::TerminationCriteria,
) -> Vec<CellAggregate> {
    rows.chunk_by(|a, b| a.dt == b.dt && a.horizon == b.horizon)
        .map(|cell| {
            let n = cell.len() as f64;
            let mean = |f: fn(&TableRow) -> f64| cell.iter().map(f).sum::<f64>() / n;
            let worst =
                |f: fn(&TableRow) -> f64| cell.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            let count = |o| cell.iter().filter(|r| r.outcome == o).count();
            let mean_values = CellValues {
                total_time: mean(|r| r.total_time),
                max_solve_time: mean(|r| r.max_solve_time),
                euclidean_error: mean(|r| r.euclidean_error),
                rotation_error: mean(|r| r.rotation_error),
            };
            let dt = cell[0].dt;
            let successes = count(Outcome::Success);
            let pass_mean = successes == cell.len()
                && mean_values.total_time <= criteria.max_wall_time
                && mean_values.max_solve_time < dt
                && mean_values.euclidean_error <= criteria.pos_tol
                && mean_values.rotation_error <= criteria.rot_tol;
            CellAggregate {
                dt,
                horizon: cell[0].horizon,
                mean: mean_values,
                worst: CellValues {
                    total_time: worst(|r| r.total_time),
                    max_solve_time: worst(|r| r.max_solve_time),
                    euclidean_error: worst(|r| r.euclidean_error),
                    rotation_error: worst(|r| r.rotation_error),
                },
                outcome: worst_outcome(cell.iter().map(|r| r.outcome)),
                runs: cell.len(),
                successes,
                timeouts: count(Outcome::Timeout),
                collisions: count(Outcome::Collision),
                pass_mean,
                pass_worst: cell.iter().all(|r| r.flags.all),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmpc_core::TerminationCriteria;

    fn row(dt: f64, horizon: usize, trial: usize, e: f64, outcome: Outcome) -> TableRow {
        let m = RunMetrics {
            euclidean_position_error: e,
            rotation_error: 0.1,
            max_trajectory_error: e,
            avg_trajectory_error: e,
            min_obstacle_distance: None,
            total_time: 3.0 + trial as f64,
            max_solve_time: 0.01,
            outcome,
        };
        TableRow {
            dt,
            horizon,
            target: 0,
            trial,
            seed: trial as u64,
            total_time: m.total_time,
            max_solve_time: m.max_solve_time,
            euclidean_error: e,
            rotation_error: 0.1,
            outcome,
            flags: flags(&m, dt, &TerminationCriteria::default()),
        }
    }

    #[test]
    fn aggregate_reports_mean_and_worst_per_cell() {
        let rows = vec![
            row(0.1, 5, 0, 0.1, Outcome::Success),
            row(0.1, 5, 1, 0.2, Outcome::Success),
            row(0.1, 5, 2, 0.6, Outcome::Timeout),
            row(0.5, 5, 0, 0.1, Outcome::Success),
        ];
        let cells = aggregate(&rows, &TerminationCriteria::default());
        assert_eq!(cells.len(), 2);
        let c = &cells[0];
        assert!((c.mean.euclidean_error - 0.3).abs() < 1e-12);
        assert!((c.mean.total_time - 4.0).abs() < 1e-12);
        assert_eq!(c.worst.euclidean_error, 0.6);
        assert_eq!((c.runs, c.successes, c.timeouts), (3, 2, 1));
        assert_eq!(c.outcome, Outcome::Timeout);
        assert!(!c.pass_mean && !c.pass_worst);
        assert!(cells[1].pass_mean && cells[1].pass_worst);
    }

    #[test]
    fn flags_follow_thresholds() {
        let r = row(0.5, 20, 0, 0.39, Outcome::Success);
        assert!(r.flags.all);
        let r = row(0.5, 20, 0, 0.41, Outcome::Success);
        assert!(!r.flags.euclidean && !r.flags.all);
        let r = row(0.005, 20, 0, 0.1, Outcome::Success);
        assert!(!r.flags.solve_time && !r.flags.all);
    }

    #[test]
    fn collision_dominates_outcomes() {
        use Outcome::*;
        assert_eq!(worst_outcome([Success, Collision, Timeout]), Collision);
        assert_eq!(worst_outcome([Success, Timeout]), Timeout);
        assert_eq!(worst_outcome([]), Success);
    }
}
