//! Receding-horizon loop: regulate to the active waypoint, apply the first
//! control of each solution, shift the solution forward as the next warm start.

use std::time::Instant;

use crate::error::{NmpcError, Result};
use crate::model::{clamp_control, Control, Pose};
use crate::ocp::{penalized_objective, ControlSequence, OcpSpec, Reference};
use crate::solver::{solve, SolveResult, SolverConfig};

/// Arrival thresholds and the simulated-time limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationCriteria {
    /// meters, Euclidean
    pub pos_tol: f64,
    /// radians, wrapped
    pub rot_tol: f64,
    /// seconds of simulated time
    pub max_wall_time: f64,
    /// Final-waypoint arrival also requires the last commanded `|v|` to be at
    /// most this (m/s)...
    pub settle_speed: f64,
    /// ...and the last commanded `|ω|` at most this (rad/s).
    pub settle_turn_rate: f64,
}

impl Default for TerminationCriteria {
    fn default() -> Self {
        Self {
            pos_tol: 0.4,
            rot_tol: 0.4,
            max_wall_time: 10.0,
            settle_speed: 0.1,
            settle_turn_rate: 0.5,
        }
    }
}

impl TerminationCriteria {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.pos_tol, self.rot_tol, self.max_wall_time]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive {
            return Err(NmpcError::InvalidConfig(
                "termination tolerances and time limit must be positive".into(),
            ));
        }
        if !(self.settle_speed >= 0.0 && self.settle_turn_rate >= 0.0) {
            return Err(NmpcError::InvalidConfig(
                "settle thresholds must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn settled(&self, last_command: &Control) -> bool {
        last_command.v.abs() <= self.settle_speed
            && last_command.omega.abs() <= self.settle_turn_rate
    }

    pub fn reached(&self, pose: &Pose, target: &Pose) -> bool {
        pose.distance_to(target) <= self.pos_tol && pose.heading_error_to(target) <= self.rot_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    pub waypoints: Vec<Pose>,
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<Pose>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(NmpcError::InvalidConfig(
                "waypoint plan must not be empty".into(),
            ));
        }
        if waypoints.iter().any(|p| !p.is_finite()) {
            return Err(NmpcError::InvalidConfig("waypoints must be finite".into()));
        }
        Ok(Self { waypoints })
    }

    pub fn single(target: Pose) -> Self {
        Self {
            waypoints: vec![target],
        }
    }

    pub fn last(&self) -> Pose {
        *self.waypoints.last().expect("plan is nonempty")
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Running,
    Success,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub current_waypoint_index: usize,
    /// Most recent solved horizon (all zeros before the first solve); always
    /// `horizon` long.
    pub last_solution: ControlSequence,
    /// Simulated seconds.
    pub elapsed: f64,
    pub steps: usize,
    pub terminated: bool,
}

impl ControllerState {
    pub fn new(horizon: usize) -> Self {
        Self {
            current_waypoint_index: 0,
            last_solution: ControlSequence::zeros(horizon),
            elapsed: 0.0,
            steps: 0,
            terminated: false,
        }
    }
}

/// Moves to the next waypoint once the active one is within both tolerances.
/// Saturates at the last waypoint.
pub fn advance_waypoint(
    ctrl: &ControllerState,
    plan: &WaypointPlan,
    measured: &Pose,
    criteria: &TerminationCriteria,
) -> ControllerState {
    let mut next = ctrl.clone();
    let idx = ctrl.current_waypoint_index.min(plan.len() - 1);
    if idx + 1 < plan.len() && criteria.reached(measured, &plan.waypoints[idx]) {
        next.current_waypoint_index = idx + 1;
    }
    next
}

pub fn is_done(
    ctrl: &ControllerState,
    plan: &WaypointPlan,
    measured: &Pose,
    criteria: &TerminationCriteria,
) -> RunStatus {
    let on_last = ctrl.current_waypoint_index + 1 >= plan.len();
    let last_command = ctrl.last_solution.first().unwrap_or(Control::ZERO);
    if on_last && criteria.reached(measured, &plan.last()) && criteria.settled(&last_command) {
        RunStatus::Success
    } else if ctrl.elapsed >= criteria.max_wall_time {
        RunStatus::Timeout
    } else {
        RunStatus::Running
    }
}

/// Output of one receding-horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// First control of the solved horizon, clamped to bounds.
    pub control: Control,
    pub solve: SolveResult,
}

/// Initial guess for the next solve: the previous solution shifted by one
/// step, unless the unshifted previous solution scores better from `measured`
/// (the pose has not moved as predicted, e.g. a repeated measurement).
fn warm_start(
    ctrl: &ControllerState,
    spec: &OcpSpec,
    measured: Pose,
    config: &SolverConfig,
) -> Result<ControlSequence> {
    if ctrl.last_solution.len() != spec.horizon {
        return Ok(ControlSequence::zeros(spec.horizon));
    }
    if ctrl.steps == 0 {
        return Ok(ctrl.last_solution.clone());
    }
    let shifted = ctrl.last_solution.shifted();
    let mu = config.mu_init;
    let j_shift = penalized_objective(spec, measured, &shifted, mu)?;
    let j_prev = penalized_objective(spec, measured, &ctrl.last_solution, mu)?;
    Ok(if j_prev < j_shift {
        ctrl.last_solution.clone()
    } else {
        shifted
    })
}

/// Constant half-speed arcs to the left and right. Extra initial guesses
/// when obstacles are present: a gradient method started from a straight
/// path cannot break a left/right symmetry on its own.
fn turning_seeds(spec: &OcpSpec) -> [ControlSequence; 2] {
    let b = spec.bounds;
    let arc = |omega: f64| ControlSequence(vec![Control::new(0.5 * b.v_max, omega); spec.horizon]);
    [arc(0.25 * b.omega_max), arc(0.25 * b.omega_min)]
}

/// Solves from each initial guess in turn, splitting the wall-clock budget
/// evenly over the guesses still pending, and keeps the solution with the
/// lowest penalized objective at the final penalty weight. Reported time and
/// iterations cover all solves.
fn solve_from_guesses(
    spec: &OcpSpec,
    x0: Pose,
    guesses: &[ControlSequence],
    config: &SolverConfig,
) -> Result<SolveResult> {
    let started = Instant::now();
    let mu = config.final_mu();
    let mut best: Option<(f64, SolveResult)> = None;
    let mut iterations = 0;
    for (i, guess) in guesses.iter().enumerate() {
        let remaining = config.time_budget - started.elapsed().as_secs_f64();
        if best.is_some() && remaining <= 0.0 {
            break;
        }
        let share = SolverConfig {
            time_budget: (remaining / (guesses.len() - i) as f64).max(f64::MIN_POSITIVE),
            ..*config
        };
        let candidate = solve(spec, x0, guess, &share)?;
        iterations += candidate.iterations;
        let score = penalized_objective(spec, x0, &candidate.w_opt, mu)?;
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, candidate));
        }
    }
    let (_, mut result) = best.expect("at least one guess");
    result.iterations = iterations;
    result.solve_time = started.elapsed().as_secs_f64();
    Ok(result)
}

/// Solves one OCP from `measured` toward the active waypoint, keeps the
/// solution for the next warm start and advances the simulated clock.
pub fn step(
    ctrl: &ControllerState,
    spec: &OcpSpec,
    plan: &WaypointPlan,
    measured: Pose,
    config: &SolverConfig,
) -> Result<(Control, SolveResult, ControllerState)> {
    if ctrl.terminated {
        return Err(NmpcError::Terminated);
    }
    let mut spec = spec.clone();
    let target = plan.waypoints[ctrl.current_waypoint_index.min(plan.len() - 1)];
    spec.reference = Reference {
        x_ref: target,
        ..spec.reference
    };
    let warm = warm_start(ctrl, &spec, measured, config)?;
    let mut guesses = vec![warm];
    if !spec.obstacles.is_empty() {
        guesses.extend(turning_seeds(&spec));
    }
    let result = solve_from_guesses(&spec, measured, &guesses, config)?;
    let control = clamp_control(result.w_opt.first().expect("horizon ≥ 1"), &spec.bounds);
    let mut next = ctrl.clone();
    next.last_solution = result.w_opt.clone();
    next.steps += 1;
    next.elapsed = next.steps as f64 * spec.params.dt;
    Ok((control, result, next))
}

/// Owning wrapper around [`ControllerState`] bound to one plan.
#[derive(Debug, Clone)]
pub struct Controller {
    pub spec: OcpSpec,
    pub plan: WaypointPlan,
    pub criteria: TerminationCriteria,
    pub solver: SolverConfig,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(
        spec: OcpSpec,
        plan: WaypointPlan,
        criteria: TerminationCriteria,
        solver: SolverConfig,
    ) -> Self {
        let state = ControllerState::new(spec.horizon);
        Self {
            spec,
            plan,
            criteria,
            solver,
            state,
        }
    }

    pub fn active_waypoint(&self) -> Pose {
        self.plan.waypoints[self.state.current_waypoint_index]
    }

    /// Advances the waypoint index if warranted and reports the run status.
    /// Marks the controller terminated once the status is no longer running.
    pub fn update(&mut self, measured: &Pose) -> RunStatus {
        self.state = advance_waypoint(&self.state, &self.plan, measured, &self.criteria);
        let status = is_done(&self.state, &self.plan, measured, &self.criteria);
        if status != RunStatus::Running {
            self.state.terminated = true;
        }
        status
    }

    pub fn step(&mut self, measured: Pose) -> Result<StepOutput> {
        let (control, solve, next) =
            step(&self.state, &self.spec, &self.plan, measured, &self.solver)?;
        self.state = next;
        Ok(StepOutput { control, solve })
    }
}
