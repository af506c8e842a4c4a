//! CSV output. Every table has a header row; numbers use Rust's shortest
//! round-trip formatting, so identical inputs give identical bytes.

use std::path::Path;

use nmpc_core::{RunMetrics, TrajectoryLog};

use crate::error::{CliError, Result};
use crate::sweep::{CellAggregate, TableRow};

pub const LOG_HEADER: [&str; 14] = [
    "t_s",
    "cmd_v_mps",
    "cmd_omega_radps",
    "applied_v_mps",
    "applied_omega_radps",
    "true_x_m",
    "true_y_m",
    "true_theta_rad",
    "meas_x_m",
    "meas_y_m",
    "meas_theta_rad",
    "waypoint_index",
    "solve_time_s",
    "status",
];

/// Columns that depend on wall-clock timing rather than on inputs and seeds.
pub const TIMING_COLUMNS: [&str; 4] = [
    "solve_time_s",
    "status",
    "max_solve_time_s",
    "pass_solve_time",
];

const METRIC_COLUMNS: [&str; 8] = [
    "euclidean_position_error_m",
    "rotation_error_rad",
    "max_trajectory_error_m",
    "avg_trajectory_error_m",
    "min_obstacle_distance_m",
    "total_time_s",
    "max_solve_time_s",
    "outcome",
];

pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_log(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let rows = log.rows.iter().map(|r| {
        let (cmd, applied, solve_time, status) = match &r.actuation {
            Some(a) => (
                [num(a.commanded.v), num(a.commanded.omega)],
                [num(a.applied.v), num(a.applied.omega)],
                num(a.solve_time),
                match &a.status {
                    Ok(s) => s.as_str().to_string(),
                    Err(e) => format!("error: {e}"),
                },
            ),
            None => (
                Default::default(),
                Default::default(),
                String::new(),
                String::new(),
            ),
        };
        let [cv, cw] = cmd;
        let [av, aw] = applied;
        vec![
            num(r.t),
            cv,
            cw,
            av,
            aw,
            num(r.true_pose.x),
            num(r.true_pose.y),
            num(r.true_pose.theta),
            num(r.measured_pose.x),
            num(r.measured_pose.y),
            num(r.measured_pose.theta),
            r.waypoint_index.to_string(),
            solve_time,
            status,
        ]
    });
    write_table(path, &LOG_HEADER, rows)
}

fn metric_fields(m: &RunMetrics) -> Vec<String> {
    vec![
        num(m.euclidean_position_error),
        num(m.rotation_error),
        num(m.max_trajectory_error),
        num(m.avg_trajectory_error),
        opt(m.min_obstacle_distance),
        num(m.total_time),
        num(m.max_solve_time),
        m.outcome.as_str().to_string(),
    ]
}

pub fn write_metrics(path: &Path, name: &str, seed: u64, m: &RunMetrics) -> Result<()> {
    let mut header = vec!["scenario", "seed"];
    header.extend(METRIC_COLUMNS);
    let mut row = vec![name.to_string(), seed.to_string()];
    row.extend(metric_fields(m));
    write_table(path, &header, [row])
}

/// One row per trial followed by an `average` row. The average row's
/// outcome column counts successes, e.g. `3/3 success`.
pub fn write_waypoint_metrics(path: &Path, trials: &[(u64, RunMetrics)]) -> Result<()> {
    let mut header = vec!["trial", "seed"];
    header.extend(METRIC_COLUMNS);
    let mut rows: Vec<Vec<String>> = trials
        .iter()
        .enumerate()
        .map(|(i, (seed, m))| {
            let mut row = vec![(i + 1).to_string(), seed.to_string()];
            row.extend(metric_fields(m));
            row
        })
        .collect();
    if !trials.is_empty() {
        let a = average_metrics(trials.iter().map(|(_, m)| m));
        let successes = trials
            .iter()
            .filter(|(_, m)| m.outcome == nmpc_core::Outcome::Success)
            .count();
        let mut row = vec!["average".to_string(), String::new()];
        row.extend([
            num(a.euclidean_position_error),
            num(a.rotation_error),
            num(a.max_trajectory_error),
            num(a.avg_trajectory_error),
            opt(a.min_obstacle_distance),
            num(a.total_time),
            num(a.max_solve_time),
            format!("{successes}/{} success", trials.len()),
        ]);
        rows.push(row);
    }
    write_table(path, &header, rows)
}

/// Field-wise means of the numeric metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMetrics {
    pub euclidean_position_error: f64,
    pub rotation_error: f64,
    pub max_trajectory_error: f64,
    pub avg_trajectory_error: f64,
    pub min_obstacle_distance: Option<f64>,
    pub total_time: f64,
    pub max_solve_time: f64,
}

pub fn average_metrics<'a>(ms: impl IntoIterator<Item = &'a RunMetrics>) -> MeanMetrics {
    let ms: Vec<&RunMetrics> = ms.into_iter().collect();
    let n = ms.len() as f64;
    let mean = |f: fn(&RunMetrics) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / n;
    let clearances: Option<Vec<f64>> = ms.iter().map(|m| m.min_obstacle_distance).collect();
    MeanMetrics {
        euclidean_position_error: mean(|m| m.euclidean_position_error),
        rotation_error: mean(|m| m.rotation_error),
        max_trajectory_error: mean(|m| m.max_trajectory_error),
        avg_trajectory_error: mean(|m| m.avg_trajectory_error),
        min_obstacle_distance: clearances.map(|c| c.iter().sum::<f64>() / n),
        total_time: mean(|m| m.total_time),
        max_solve_time: mean(|m| m.max_solve_time),
    }
}

pub const SWEEP_HEADER: [&str; 15] = [
    "dt",
    "N",
    "total_time_s",
    "max_solve_time_s",
    "euclidean_error_m",
    "rotation_error_rad",
    "outcome",
    "target",
    "trial",
    "seed",
    "pass_time",
    "pass_solve_time",
    "pass_euclidean",
    "pass_rotation",
    "pass_all",
];

pub fn write_sweep(path: &Path, rows: &[TableRow]) -> Result<()> {
    write_table(
        path,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                num(r.dt),
                r.horizon.to_string(),
                num(r.total_time),
                num(r.max_solve_time),
                num(r.euclidean_error),
                num(r.rotation_error),
                r.outcome.to_string(),
                r.target.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.flags.time.to_string(),
                r.flags.solve_time.to_string(),
                r.flags.euclidean.to_string(),
                r.flags.rotation.to_string(),
                r.flags.all.to_string(),
            ]
        }),
    )
}

pub const AGGREGATE_HEADER: [&str; 17] = [
    "dt",
    "N",
    "total_time_s",
    "max_solve_time_s",
    "euclidean_error_m",
    "rotation_error_rad",
    "outcome",
    "worst_total_time_s",
    "worst_max_solve_time_s",
    "worst_euclidean_error_m",
    "worst_rotation_error_rad",
    "runs",
    "successes",
    "timeouts",
    "collisions",
    "pass_mean",
    "pass_worst",
];

pub fn write_aggregate(path: &Path, cells: &[CellAggregate]) -> Result<()> {
    write_table(
        path,
        &AGGREGATE_HEADER,
        cells.iter().map(|c| {
            vec![
                num(c.dt),
                c.horizon.to_string(),
                num(c.mean.total_time),
                num(c.mean.max_solve_time),
                num(c.mean.euclidean_error),
                num(c.mean.rotation_error),
                c.outcome.to_string(),
                num(c.worst.total_time),
                num(c.worst.max_solve_time),
                num(c.worst.euclidean_error),
                num(c.worst.rotation_error),
                c.runs.to_string(),
                c.successes.to_string(),
                c.timeouts.to_string(),
                c.collisions.to_string(),
                c.pass_mean.to_string(),
                c.pass_worst.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmpc_core::Outcome;

    fn metrics(e: f64, clearance: Option<f64>) -> RunMetrics {
        RunMetrics {
            euclidean_position_error: e,
            rotation_error: 0.1,
            max_trajectory_error: 2.0 * e,
            avg_trajectory_error: e,
            min_obstacle_distance: clearance,
            total_time: 5.0,
            max_solve_time: 0.01,
            outcome: Outcome::Success,
        }
    }

    #[test]
    fn average_is_fieldwise_mean() {
        let ms = [metrics(0.1, Some(0.7)), metrics(0.3, Some(0.9))];
        let a = average_metrics(&ms);
        assert!((a.euclidean_position_error - 0.2).abs() < 1e-12);
        assert!((a.max_trajectory_error - 0.4).abs() < 1e-12);
        assert!((a.min_obstacle_distance.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(
            average_metrics(&[metrics(0.1, None)]).min_obstacle_distance,
            None
        );
    }

    #[test]
    fn waypoint_table_has_trial_rows_then_average() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let trials = [
            (0, metrics(0.1, None)),
            (1, metrics(0.2, None)),
            (2, metrics(0.3, None)),
        ];
        write_waypoint_metrics(&path, &trials).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("trial,seed,euclidean_position_error_m"));
        assert!(lines[4].starts_with("average,,0.2"), "{}", lines[4]);
        assert!(lines[4].ends_with("3/3 success"));
    }
}
