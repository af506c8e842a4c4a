//! Finite-horizon optimal control problem in single-shooting form.
//!
//! The decision variable is the control sequence `w = [u_0, …, u_{N-1}]`; states
//! are eliminated by rolling the Euler model forward from the measured pose.
//! The objective is the sum of quadratic stage costs over `k = 0..N-1` (no
//! terminal term). Circular keep-out constraints on every predicted pose are
//! folded in as an exterior squared-hinge penalty, and the exact gradient of the
//! penalized objective comes from a single backward (adjoint) sweep.

use crate::error::{NmpcError, Result};
use crate::model::{euler_step, wrap_angle, Control, ControlBounds, ModelParams, Pose};

/// Diagonal weights of the quadratic stage cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// State weights for `(x, y, θ)`.
    pub q: [f64; 3],
    /// Control weights for `(v, ω)`.
    pub r: [f64; 2],
}

impl Default for Weights {
    /// `Q = diag(1, 5, 0.1)`, `R = diag(0.5, 0.05)`.
    fn default() -> Self {
        Self {
            q: [1.0, 5.0, 0.1],
            r: [0.5, 0.05],
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), String> {
        let all = self.q.iter().chain(self.r.iter());
        if all.clone().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("cost weights must be finite and non-negative".into());
        }
        if !self.q.iter().any(|&w| w > 0.0) {
            return Err("at least one state weight must be positive".into());
        }
        Ok(())
    }
}

/// Set point for the stage cost.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub x_ref: Pose,
    pub u_ref: Control,
}

impl Reference {
    /// Drive-to-rest reference at `target`.
    pub fn at(target: Pose) -> Self {
        Self {
            x_ref: target,
            u_ref: Control::ZERO,
        }
    }
}

/// Static circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    /// meters
    pub radius: f64,
}

impl Obstacle {
    pub const fn new(x: f64, y: f64, radius: f64) -> Self {
        Self { x, y, radius }
    }

    pub fn center_distance(&self, p: &Pose) -> f64 {
        (p.x - self.x).hypot(p.y - self.y)
    }
}

/// A fully specified OCP instance. Immutable once handed to the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpSpec {
    pub horizon: usize,
    pub params: ModelParams,
    pub bounds: ControlBounds,
    pub weights: Weights,
    pub reference: Reference,
    pub obstacles: Vec<Obstacle>,
    pub robot_radius: f64,
    pub safety_margin: f64,
}

impl OcpSpec {
    /// Obstacle-free problem with default weights and bounds.
    pub fn new(horizon: usize, dt: f64, target: Pose) -> Self {
        Self {
            horizon,
            params: ModelParams::new(dt),
            bounds: ControlBounds::default(),
            weights: Weights::default(),
            reference: Reference::at(target),
            obstacles: Vec::new(),
            robot_radius: 0.0,
            safety_margin: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NmpcError::InvalidConfig(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.params.dt > 0.0 && self.params.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.params.dt));
        }
        self.bounds.validate().map_err(NmpcError::InvalidConfig)?;
        self.weights.validate().map_err(NmpcError::InvalidConfig)?;
        if !(self.robot_radius >= 0.0) {
            return bad("robot radius must be non-negative".into());
        }
        if !(self.safety_margin >= 0.0) {
            return bad("safety margin must be non-negative".into());
        }
        if self
            .obstacles
            .iter()
            .any(|o| !(o.radius >= 0.0) || !o.x.is_finite() || !o.y.is_finite())
        {
            return bad("obstacles need a finite center and non-negative radius".into());
        }
        Ok(())
    }

    /// Minimum permitted center distance to `ob`: `r + r_ob + margin`.
    pub fn keep_out_radius(&self, ob: &Obstacle) -> f64 {
        self.robot_radius + ob.radius + self.safety_margin
    }

    fn check_len(&self, w: &ControlSequence) -> Result<()> {
        if w.len() != self.horizon {
            return Err(NmpcError::DimensionMismatch {
                expected: self.horizon,
                found: w.len(),
            });
        }
        Ok(())
    }
}

/// The decision variable: one control per horizon step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSequence(pub Vec<Control>);

impl ControlSequence {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Control::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Control> {
        self.0.first().copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Control> {
        self.0.iter()
    }

    /// Drops the first control and repeats the last one, keeping the length.
    pub fn shifted(&self) -> Self {
        match self.0.as_slice() {
            [] => Self::default(),
            [_, rest @ ..] => {
                let mut v = rest.to_vec();
                v.push(*self.0.last().unwrap());
                Self(v)
            }
        }
    }
}

impl From<Vec<Control>> for ControlSequence {
    fn from(v: Vec<Control>) -> Self {
        Self(v)
    }
}

/// Predicted poses `x_0 … x_N` under `w`. `result[0] == x0`.
pub fn rollout(spec: &OcpSpec, x0: Pose, w: &ControlSequence) -> Result<Vec<Pose>> {
    spec.check_len(w)?;
    Ok(rollout_unchecked(spec.params, x0, &w.0))
}

fn rollout_unchecked(params: ModelParams, x0: Pose, w: &[Control]) -> Vec<Pose> {
    let mut traj = Vec::with_capacity(w.len() + 1);
    traj.push(x0);
    let mut s = x0;
    for &u in w {
        s = euler_step(s, u, params);
        traj.push(s);
    }
    traj
}

/// Weighted squared deviation from the reference, heading error wrapped.
pub fn stage_cost(x: &Pose, u: &Control, reference: &Reference, weights: &Weights) -> f64 {
    let ex = x.x - reference.x_ref.x;
    let ey = x.y - reference.x_ref.y;
    let et = wrap_angle(x.theta - reference.x_ref.theta);
    let ev = u.v - reference.u_ref.v;
    let ew = u.omega - reference.u_ref.omega;
    let [qx, qy, qt] = weights.q;
    let [rv, rw] = weights.r;
    qx * ex * ex + qy * ey * ey + qt * et * et + rv * ev * ev + rw * ew * ew
}

/// Sum of stage costs along the rollout for `k = 0..N-1`.
pub fn total_cost(spec: &OcpSpec, x0: Pose, w: &ControlSequence) -> Result<f64> {
    let traj = rollout(spec, x0, w)?;
    Ok(sum_stage_costs(spec, &traj, &w.0))
}

fn sum_stage_costs(spec: &OcpSpec, traj: &[Pose], w: &[Control]) -> f64 {
    traj.iter()
        .zip(w)
        .map(|(x, u)| stage_cost(x, u, &spec.reference, &spec.weights))
        .sum()
}

/// Constraint values `g = keep_out − distance`, pose-major: entry
/// `k * n_obstacles + j` is pose `k` against obstacle `j`. `g ≤ 0` is feasible.
pub fn obstacle_violations(spec: &OcpSpec, trajectory: &[Pose]) -> Vec<f64> {
    trajectory
        .iter()
        .flat_map(|p| {
            spec.obstacles
                .iter()
                .map(move |ob| spec.keep_out_radius(ob) - ob.center_distance(p))
        })
        .collect()
}

/// Largest positive violation over the trajectory, or 0 when feasible.
pub fn max_violation(spec: &OcpSpec, trajectory: &[Pose]) -> f64 {
    obstacle_violations(spec, trajectory)
        .into_iter()
        .fold(0.0, f64::max)
}

fn penalty_sum(spec: &OcpSpec, traj: &[Pose]) -> f64 {
    obstacle_violations(spec, traj)
        .into_iter()
        .map(|g| {
            let h = g.max(0.0);
            h * h
        })
        .sum()
}

/// `total_cost + mu · Σ max(0, g)²` over every predicted pose (including the
/// initial and terminal ones).
pub fn penalized_objective(spec: &OcpSpec, x0: Pose, w: &ControlSequence, mu: f64) -> Result<f64> {
    let traj = rollout(spec, x0, w)?;
    Ok(penalized_from_traj(spec, &traj, &w.0, mu))
}

fn penalized_from_traj(spec: &OcpSpec, traj: &[Pose], w: &[Control], mu: f64) -> f64 {
    let cost = sum_stage_costs(spec, traj, w);
    if mu == 0.0 || spec.obstacles.is_empty() {
        cost
    } else {
        cost + mu * penalty_sum(spec, traj)
    }
}

/// Gradient of [`penalized_objective`] with respect to each control.
///
/// Entry `k` holds `(∂J/∂v_k, ∂J/∂ω_k)` packed into a [`Control`].
pub fn objective_gradient(
    spec: &OcpSpec,
    x0: Pose,
    w: &ControlSequence,
    mu: f64,
) -> Result<Vec<Control>> {
    objective_and_gradient(spec, x0, w, mu).map(|(_, g)| g)
}

/// Objective value and its gradient from one forward rollout and one adjoint sweep.
pub fn objective_and_gradient(
    spec: &OcpSpec,
    x0: Pose,
    w: &ControlSequence,
    mu: f64,
) -> Result<(f64, Vec<Control>)> {
    spec.check_len(w)?;
    let dt = spec.params.dt;
    let n = spec.horizon;
    let traj = rollout_unchecked(spec.params, x0, &w.0);
    let value = penalized_from_traj(spec, &traj, &w.0, mu);

    let [qx, qy, qt] = spec.weights.q;
    let [rv, rw] = spec.weights.r;
    let xr = spec.reference.x_ref;
    let ur = spec.reference.u_ref;

    // d(mu·Σ max(0,g)²)/d(x, y) at a pose
    let penalty_grad = |p: &Pose| -> (f64, f64) {
        if mu == 0.0 {
            return (0.0, 0.0);
        }
        let (mut gx, mut gy) = (0.0, 0.0);
        for ob in &spec.obstacles {
            let d = ob.center_distance(p);
            let g = spec.keep_out_radius(ob) - d;
            if g > 0.0 && d > 0.0 {
                // dg/dp = -(p - c) / d
                let s = -2.0 * mu * g / d;
                gx += s * (p.x - ob.x);
                gy += s * (p.y - ob.y);
            }
        }
        (gx, gy)
    };

    let mut grad = vec![Control::ZERO; n];
    // adjoint of the terminal pose: only the penalty acts on x_N
    let (mut lx, mut ly) = penalty_grad(&traj[n]);
    let mut lt = 0.0;
    for k in (0..n).rev() {
        let s = traj[k];
        let u = w.0[k];
        let (sin, cos) = s.theta.sin_cos();
        grad[k] = Control {
            v: 2.0 * rv * (u.v - ur.v) + dt * (cos * lx + sin * ly),
            omega: 2.0 * rw * (u.omega - ur.omega) + dt * lt,
        };
        // propagate through the Euler step, then add the local cost at pose k
        let (px, py) = penalty_grad(&s);
        let lt_prev = lt + dt * u.v * (-sin * lx + cos * ly);
        lx += 2.0 * qx * (s.x - xr.x) + px;
        ly += 2.0 * qy * (s.y - xr.y) + py;
        lt = lt_prev + 2.0 * qt * wrap_angle(s.theta - xr.theta);
    }
    Ok((value, grad))
}
