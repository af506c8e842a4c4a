//! Closed-loop plant simulation with control and localization noise.
//!
//! The plant is the same Euler model the controller predicts with. Noise
//! sources draw from independent ChaCha streams derived from one seed, so
//! switching one source off leaves the other's sequence untouched.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{Controller, RunStatus, TerminationCriteria, WaypointPlan};
use crate::error::{NmpcError, Result};
use crate::model::{clamp_control, euler_step, Control, ControlBounds, ModelParams, Pose};
use crate::ocp::{Obstacle, OcpSpec, Reference, Weights};
use crate::solver::{SolveStatus, SolverConfig};

const CONTROL_STREAM: u64 = 1;
const LOCALIZATION_STREAM: u64 = 2;

/// Zero-mean Gaussian noise magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the multiplicative control error (0.1 = 10%).
    pub control_noise_frac: f64,
    /// Standard deviation of the position measurement error, meters.
    pub localization_sigma: f64,
    /// Standard deviation of the heading measurement error, radians.
    pub heading_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            control_noise_frac: 0.0,
            localization_sigma: 0.0,
            heading_sigma: 0.0,
            seed: 0,
        }
    }

    /// Heading noise defaults to 2 rad per meter of position noise
    /// (0.04 rad for 0.02 m).
    pub fn new(control_noise_frac: f64, localization_sigma: f64, seed: u64) -> Self {
        Self {
            control_noise_frac,
            localization_sigma,
            heading_sigma: localization_sigma / 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [
            self.control_noise_frac,
            self.localization_sigma,
            self.heading_sigma,
        ]
        .iter()
        .all(|v| *v >= 0.0 && v.is_finite())
        {
            Ok(())
        } else {
            Err(NmpcError::InvalidConfig(
                "noise magnitudes must be finite and non-negative".into(),
            ))
        }
    }

    pub fn is_silent(&self) -> bool {
        self.control_noise_frac == 0.0
            && self.localization_sigma == 0.0
            && self.heading_sigma == 0.0
    }
}

/// Per-source random streams for one run.
#[derive(Debug, Clone)]
pub struct NoiseStreams {
    pub control: ChaCha8Rng,
    pub localization: ChaCha8Rng,
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            control: stream(CONTROL_STREAM),
            localization: stream(LOCALIZATION_STREAM),
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    // Normal::new only fails for negative or non-finite sigma
    Normal::new(0.0, sigma)
        .map(|n| n.sample(rng))
        .unwrap_or(0.0)
}

/// Scales each component by `1 + ε`, `ε ~ N(0, control_noise_frac)`, then
/// re-clamps to `bounds`.
pub fn apply_control_noise<R: Rng + ?Sized>(
    u: Control,
    noise: &NoiseModel,
    bounds: &ControlBounds,
    rng: &mut R,
) -> Control {
    let ev = gaussian(rng, noise.control_noise_frac);
    let ew = gaussian(rng, noise.control_noise_frac);
    clamp_control(Control::new(u.v * (1.0 + ev), u.omega * (1.0 + ew)), bounds)
}

/// Additive Gaussian error on position and heading.
pub fn apply_localization_noise<R: Rng + ?Sized>(
    true_pose: Pose,
    noise: &NoiseModel,
    rng: &mut R,
) -> Pose {
    let dx = gaussian(rng, noise.localization_sigma);
    let dy = gaussian(rng, noise.localization_sigma);
    let dt = gaussian(rng, noise.heading_sigma);
    Pose::new(true_pose.x + dx, true_pose.y + dy, true_pose.theta + dt)
}

/// Full description of one closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub start: Pose,
    pub plan: WaypointPlan,
    pub obstacles: Vec<Obstacle>,
    pub robot_radius: f64,
    pub safety_margin: f64,
    pub dt: f64,
    pub horizon: usize,
    pub weights: Weights,
    pub bounds: ControlBounds,
    pub noise: NoiseModel,
    pub criteria: TerminationCriteria,
}

impl Scenario {
    /// Obstacle-free, noise-free run to a single target with default settings.
    pub fn point_to_point(name: &str, start: Pose, target: Pose, dt: f64, horizon: usize) -> Self {
        Self {
            name: name.to_string(),
            start,
            plan: WaypointPlan::single(target),
            obstacles: Vec::new(),
            robot_radius: 0.15,
            safety_margin: 0.05,
            dt,
            horizon,
            weights: Weights::default(),
            bounds: ControlBounds::default(),
            noise: NoiseModel::none(),
            criteria: TerminationCriteria::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() {
            return Err(NmpcError::InvalidConfig("start pose must be finite".into()));
        }
        WaypointPlan::new(self.plan.waypoints.clone())?;
        self.ocp_spec().validate()?;
        self.noise.validate()?;
        self.criteria.validate()
    }

    /// OCP template; the reference is replaced by the active waypoint at each step.
    pub fn ocp_spec(&self) -> OcpSpec {
        OcpSpec {
            horizon: self.horizon,
            params: ModelParams::new(self.dt),
            bounds: self.bounds,
            weights: self.weights,
            reference: Reference::at(self.plan.waypoints.first().copied().unwrap_or_default()),
            obstacles: self.obstacles.clone(),
            robot_radius: self.robot_radius,
            safety_margin: self.safety_margin,
        }
    }

    /// Start pose followed by the waypoints: the planned geometric path.
    pub fn planned_path(&self) -> WaypointPlan {
        let mut pts = Vec::with_capacity(self.plan.len() + 1);
        pts.push(self.start);
        pts.extend_from_slice(&self.plan.waypoints);
        WaypointPlan { waypoints: pts }
    }

    /// Final waypoint.
    pub fn target(&self) -> Pose {
        self.plan.last()
    }

    /// True if `p` lies strictly inside the hard radius `r + r_ob` of any obstacle.
    pub fn collides(&self, p: &Pose) -> bool {
        self.obstacles
            .iter()
            .any(|ob| ob.center_distance(p) < self.robot_radius + ob.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Timeout,
    Collision,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Control-side fields of a row; absent on the terminal row.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuation {
    pub commanded: Control,
    pub applied: Control,
    /// Wall-clock seconds spent in the solver.
    pub solve_time: f64,
    pub status: std::result::Result<SolveStatus, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    /// Simulated seconds, `index · dt`.
    pub t: f64,
    pub true_pose: Pose,
    pub measured_pose: Pose,
    pub waypoint_index: usize,
    pub actuation: Option<Actuation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
    pub outcome: Outcome,
    /// Wall-clock seconds for the whole run.
    pub wall_time: f64,
}

impl TrajectoryLog {
    pub fn true_positions(&self) -> impl Iterator<Item = Pose> + '_ {
        self.rows.iter().map(|r| r.true_pose)
    }

    pub fn final_pose(&self) -> Pose {
        self.rows.last().map(|r| r.true_pose).unwrap_or_default()
    }

    pub fn applied_controls(&self) -> impl Iterator<Item = Control> + '_ {
        self.rows
            .iter()
            .filter_map(|r| r.actuation.as_ref().map(|a| a.applied))
    }

    pub fn solve_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows
            .iter()
            .filter_map(|r| r.actuation.as_ref().map(|a| a.solve_time))
    }
}

/// Runs the closed loop until success, timeout or collision.
///
/// Each tick measures the true pose with noise, updates the controller, solves,
/// perturbs the commanded control and integrates the true pose. The final row
/// carries no actuation.
pub fn run_scenario(scn: &Scenario, config: &SolverConfig) -> Result<TrajectoryLog> {
    scn.validate()?;
    config.validate()?;
    let started = Instant::now();
    let params = ModelParams::new(scn.dt);
    let mut streams = NoiseStreams::new(scn.noise.seed);
    let mut ctrl = Controller::new(scn.ocp_spec(), scn.plan.clone(), scn.criteria, *config);
    let mut rows = Vec::new();
    let mut true_pose = scn.start;
    let mut k = 0usize;

    let row = |k: usize, true_pose, measured_pose, waypoint_index, actuation| LogRow {
        t: k as f64 * scn.dt,
        true_pose,
        measured_pose,
        waypoint_index,
        actuation,
    };

    let outcome = loop {
        let measured = apply_localization_noise(true_pose, &scn.noise, &mut streams.localization);
        if k == 0 && scn.collides(&true_pose) {
            rows.push(row(k, true_pose, measured, 0, None));
            break Outcome::Collision;
        }
        match ctrl.update(&measured) {
            RunStatus::Success => {
                rows.push(row(
                    k,
                    true_pose,
                    measured,
                    ctrl.state.current_waypoint_index,
                    None,
                ));
                break Outcome::Success;
            }
            RunStatus::Timeout => {
                rows.push(row(
                    k,
                    true_pose,
                    measured,
                    ctrl.state.current_waypoint_index,
                    None,
                ));
                break Outcome::Timeout;
            }
            RunStatus::Running => {}
        }
        let waypoint_index = ctrl.state.current_waypoint_index;
        let (commanded, solve_time, status) = match ctrl.step(measured) {
            Ok(out) => (out.control, out.solve.solve_time, Ok(out.solve.status)),
            Err(e) => (Control::ZERO, 0.0, Err(e.to_string())),
        };
        let applied = apply_control_noise(commanded, &scn.noise, &scn.bounds, &mut streams.control);
        rows.push(row(
            k,
            true_pose,
            measured,
            waypoint_index,
            Some(Actuation {
                commanded,
                applied,
                solve_time,
                status,
            }),
        ));
        true_pose = euler_step(true_pose, applied, params);
        k += 1;
        if scn.collides(&true_pose) {
            let measured =
                apply_localization_noise(true_pose, &scn.noise, &mut streams.localization);
            rows.push(row(
                k,
                true_pose,
                measured,
                ctrl.state.current_waypoint_index,
                None,
            ));
            break Outcome::Collision;
        }
    };

    Ok(TrajectoryLog {
        dt: scn.dt,
        rows,
        outcome,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let n = NoiseModel::none();
        let mut s = NoiseStreams::new(7);
        let u = Control::new(0.3, -0.2);
        assert_eq!(
            apply_control_noise(u, &n, &ControlBounds::default(), &mut s.control),
            u
        );
        let p = Pose::new(1.0, 2.0, 3.0);
        assert_eq!(apply_localization_noise(p, &n, &mut s.localization), p);
    }

    #[test]
    fn zero_control_is_fixed_under_multiplicative_noise() {
        let n = NoiseModel::new(0.5, 0.0, 3);
        let mut s = NoiseStreams::new(3);
        for _ in 0..100 {
            assert_eq!(
                apply_control_noise(Control::ZERO, &n, &ControlBounds::default(), &mut s.control),
                Control::ZERO
            );
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let n = NoiseModel::new(0.1, 0.02, 11);
        let draw = || {
            let mut s = NoiseStreams::new(11);
            (0..50)
                .map(|_| apply_localization_noise(Pose::default(), &n, &mut s.localization))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn streams_are_independent() {
        let mut a = NoiseStreams::new(5);
        let mut b = NoiseStreams::new(5);
        let n = NoiseModel::new(0.1, 0.02, 5);
        // drawing on b's control stream must not shift its localization stream
        for _ in 0..10 {
            apply_control_noise(
                Control::new(0.5, 0.5),
                &n,
                &ControlBounds::default(),
                &mut b.control,
            );
        }
        let pa = apply_localization_noise(Pose::default(), &n, &mut a.localization);
        let pb = apply_localization_noise(Pose::default(), &n, &mut b.localization);
        assert_eq!(pa, pb);
    }

    #[test]
    fn localization_noise_has_requested_spread() {
        let n = NoiseModel::new(0.0, 0.02, 42);
        let mut s = NoiseStreams::new(42);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| apply_localization_noise(Pose::default(), &n, &mut s.localization).x)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let std = var.sqrt();
        assert!((std - 0.02).abs() <= 0.05 * 0.02, "sample std {std}");
    }

    #[test]
    fn start_on_target_succeeds_without_control() {
        let p = Pose::new(1.0, 1.0, 0.0);
        let scn = Scenario::point_to_point("still", p, p, 0.5, 20);
        let log = run_scenario(&scn, &SolverConfig::for_sampling_time(0.5)).unwrap();
        assert_eq!(log.outcome, Outcome::Success);
        assert_eq!(log.rows.len(), 1);
        assert!(log.rows[0].actuation.is_none());
    }

    #[test]
    fn start_inside_obstacle_is_a_collision() {
        let mut scn =
            Scenario::point_to_point("boxed", Pose::default(), Pose::new(2.0, 0.0, 0.0), 0.5, 10);
        scn.obstacles = vec![Obstacle::new(0.0, 0.0, 0.5)];
        let log = run_scenario(&scn, &SolverConfig::for_sampling_time(0.5)).unwrap();
        assert_eq!(log.outcome, Outcome::Collision);
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let scn =
            Scenario::point_to_point("bad", Pose::default(), Pose::new(1.0, 0.0, 0.0), -0.5, 10);
        assert!(run_scenario(&scn, &SolverConfig::default()).is_err());
    }
}
