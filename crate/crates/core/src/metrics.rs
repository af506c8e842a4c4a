//! Performance measures computed from a finished run.

use crate::controller::WaypointPlan;
use crate::model::Pose;
use crate::ocp::Obstacle;
use crate::sim::{Outcome, TrajectoryLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub euclidean_position_error: f64,
    pub rotation_error: f64,
    pub max_trajectory_error: f64,
    pub avg_trajectory_error: f64,
    /// Center-to-center; `None` without obstacles.
    pub min_obstacle_distance: Option<f64>,
    /// Simulated seconds at termination.
    pub total_time: f64,
    /// Largest per-step solver wall time.
    pub max_solve_time: f64,
    pub outcome: Outcome,
}

impl RunMetrics {
    /// `planned_path` is the geometric reference for trajectory errors,
    /// `target` the pose the final errors are measured against.
    pub fn compute(
        log: &TrajectoryLog,
        planned_path: &WaypointPlan,
        target: &Pose,
        obstacles: &[Obstacle],
    ) -> Self {
        let (euclidean_position_error, rotation_error) = final_pose_errors(log, target);
        let (max_trajectory_error, avg_trajectory_error) = trajectory_errors(log, planned_path);
        let (total_time, max_solve_time) = timing_stats(log);
        Self {
            euclidean_position_error,
            rotation_error,
            max_trajectory_error,
            avg_trajectory_error,
            min_obstacle_distance: (!obstacles.is_empty())
                .then(|| min_obstacle_distance(log, obstacles)),
            total_time,
            max_solve_time,
            outcome: log.outcome,
        }
    }
}

/// Position and wrapped heading error of the last true pose.
pub fn final_pose_errors(log: &TrajectoryLog, target: &Pose) -> (f64, f64) {
    let last = log.final_pose();
    (last.distance_to(target), last.heading_error_to(target))
}

/// Distance from `p` to segment `ab`.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

/// Consecutive distinct `(x, y)` vertices of the plan; heading-only changes
/// collapse onto one vertex.
pub fn polyline_vertices(plan: &WaypointPlan) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(plan.len());
    for p in &plan.waypoints {
        if pts.last() != Some(&(p.x, p.y)) {
            pts.push((p.x, p.y));
        }
    }
    pts
}

/// Distance from a point to the polyline through `vertices`.
pub fn distance_to_polyline(p: (f64, f64), vertices: &[(f64, f64)]) -> f64 {
    match vertices {
        [] => f64::NAN,
        [only] => (p.0 - only.0).hypot(p.1 - only.1),
        _ => vertices
            .windows(2)
            .map(|s| point_segment_distance(p, s[0], s[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Max and mean distance of the logged true positions from the plan polyline.
pub fn trajectory_errors(log: &TrajectoryLog, plan: &WaypointPlan) -> (f64, f64) {
    let verts = polyline_vertices(plan);
    let dists: Vec<f64> = log
        .true_positions()
        .map(|p| distance_to_polyline((p.x, p.y), &verts))
        .collect();
    if dists.is_empty() {
        return (0.0, 0.0);
    }
    let max = dists.iter().copied().fold(0.0, f64::max);
    let avg = dists.iter().sum::<f64>() / dists.len() as f64;
    // the mean of a set can exceed its max by rounding only
    (max, avg.min(max))
}

/// Smallest center-to-center distance between any logged true position and
/// any obstacle.
pub fn min_obstacle_distance(log: &TrajectoryLog, obstacles: &[Obstacle]) -> f64 {
    log.true_positions()
        .flat_map(|p| obstacles.iter().map(move |ob| ob.center_distance(&p)))
        .fold(f64::INFINITY, f64::min)
}

/// Simulated time at termination and the largest solver wall time.
pub fn timing_stats(log: &TrajectoryLog) -> (f64, f64) {
    let total = log.rows.last().map(|r| r.t).unwrap_or(0.0);
    let max_solve = log.solve_times().fold(0.0, f64::max);
    (total, max_solve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Control;
    use crate::sim::{Actuation, LogRow};
    use crate::solver::SolveStatus;

    fn log_of(poses: &[Pose], dt: f64, solve: &[f64]) -> TrajectoryLog {
        let rows = poses
            .iter()
            .enumerate()
            .map(|(k, p)| LogRow {
                t: k as f64 * dt,
                true_pose: *p,
                measured_pose: *p,
                waypoint_index: 0,
                actuation: solve.get(k).map(|&s| Actuation {
                    commanded: Control::ZERO,
                    applied: Control::ZERO,
                    solve_time: s,
                    status: Ok(SolveStatus::Converged),
                }),
            })
            .collect();
        TrajectoryLog {
            dt,
            rows,
            outcome: Outcome::Success,
            wall_time: 0.0,
        }
    }

    #[test]
    fn final_errors() {
        let t = Pose::default();
        assert_eq!(final_pose_errors(&log_of(&[t], 0.5, &[]), &t), (0.0, 0.0));
        assert_eq!(
            final_pose_errors(&log_of(&[Pose::new(1.0, 0.0, 0.0)], 0.5, &[]), &t),
            (1.0, 0.0)
        );
        let (_, rot) = final_pose_errors(
            &log_of(&[Pose::new(0.0, 0.0, std::f64::consts::TAU)], 0.5, &[]),
            &t,
        );
        assert!(rot < 1e-12);
    }

    #[test]
    fn points_on_polyline_have_zero_error() {
        let plan = WaypointPlan::new(vec![
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(2.0, 0.0, 0.0),
            Pose::new(2.0, 2.0, 1.57),
        ])
        .unwrap();
        let log = log_of(
            &[
                Pose::new(0.5, 0.0, 0.0),
                Pose::new(2.0, 1.0, 0.0),
                Pose::new(2.0, 2.0, 0.0),
            ],
            0.5,
            &[],
        );
        assert_eq!(trajectory_errors(&log, &plan), (0.0, 0.0));
    }

    #[test]
    fn single_offset_point() {
        let plan =
            WaypointPlan::new(vec![Pose::new(0.0, 0.0, 0.0), Pose::new(2.0, 0.0, 0.0)]).unwrap();
        let (max, avg) = trajectory_errors(&log_of(&[Pose::new(1.0, 0.1, 0.0)], 0.5, &[]), &plan);
        assert!((max - 0.1).abs() < 1e-15 && (avg - 0.1).abs() < 1e-15);
    }

    #[test]
    fn in_place_rotations_collapse() {
        let plan = WaypointPlan::new(vec![
            Pose::new(0.0, 4.1, 1.57),
            Pose::new(0.0, 4.1, 0.0),
            Pose::new(17.2, 4.1, 0.0),
        ])
        .unwrap();
        assert_eq!(polyline_vertices(&plan), vec![(0.0, 4.1), (17.2, 4.1)]);
    }

    #[test]
    fn single_waypoint_is_point_distance() {
        let plan = WaypointPlan::single(Pose::new(1.0, 1.0, 0.0));
        let (max, _) = trajectory_errors(&log_of(&[Pose::new(4.0, 5.0, 0.0)], 0.5, &[]), &plan);
        assert_eq!(max, 5.0);
    }

    #[test]
    fn obstacle_distance_examples() {
        let obs = [Obstacle::new(0.0, 0.0, 0.1)];
        let log = log_of(
            &[
                Pose::new(-1.0, 0.3, 0.0),
                Pose::new(0.0, 0.3, 0.0),
                Pose::new(1.0, 0.3, 0.0),
            ],
            0.5,
            &[],
        );
        assert!((min_obstacle_distance(&log, &obs) - 0.3).abs() < 1e-15);
        let log = log_of(
            &[Pose::new(2.0, 0.0, 0.0), Pose::new(0.758, 0.0, 0.0)],
            0.5,
            &[],
        );
        assert_eq!(min_obstacle_distance(&log, &obs), 0.758);
        let two = [Obstacle::new(0.0, 0.0, 0.1), Obstacle::new(1.0, 0.0, 0.1)];
        assert!((min_obstacle_distance(&log, &two) - 0.242).abs() < 1e-12);
    }

    #[test]
    fn timing_examples() {
        let poses = vec![Pose::default(); 21];
        let (total, _) = timing_stats(&log_of(&poses, 0.5, &[]));
        assert_eq!(total, 10.0);
        let (_, max) = timing_stats(&log_of(&poses[..4], 0.5, &[0.01, 0.03, 0.02]));
        assert_eq!(max, 0.03);
        assert_eq!(timing_stats(&log_of(&poses[..1], 0.5, &[])), (0.0, 0.0));
    }
}
