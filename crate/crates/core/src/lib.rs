//! Single-shooting nonlinear model predictive control for differential-drive
//! vehicles.
//!
//! - [`model`]: unicycle kinematics and Euler discretization
//! - [`ocp`]: tracking cost, rollout, obstacle keep-outs, adjoint gradient
//! - [`solver`]: projected gradient with Armijo backtracking and penalty escalation
//! - [`controller`]: receding-horizon loop with waypoint sequencing
//! - [`sim`]: noisy closed-loop plant simulation
//! - [`metrics`]: final-pose, trajectory, clearance and timing measures

// Validation uses negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod metrics;
pub mod model;
pub mod ocp;
pub mod sim;
pub mod solver;

pub use controller::{Controller, ControllerState, RunStatus, TerminationCriteria, WaypointPlan};
pub use error::{NmpcError, Result};
pub use metrics::RunMetrics;
pub use model::{clamp_control, euler_step, wrap_angle, Control, ControlBounds, ModelParams, Pose};
pub use ocp::{ControlSequence, Obstacle, OcpSpec, Reference, Weights};
pub use sim::{run_scenario, NoiseModel, Outcome, Scenario, TrajectoryLog};
pub use solver::{solve, solve_bruteforce, SolveResult, SolveStatus, SolverConfig};
