//! Projected-gradient solver for the single-shooting NLP.
//!
//! Box bounds on controls are enforced by projection. Obstacle keep-outs are
//! enforced by an exterior quadratic penalty whose weight is escalated in an
//! outer loop. Each inner iteration takes a projected step along the negative
//! adjoint gradient and backtracks until the Armijo sufficient-decrease test
//! holds, so the penalized objective never increases at a fixed penalty weight.
//! The trial step is the Barzilai–Borwein estimate from the previous accepted
//! step.

use std::time::{Duration, Instant};

use crate::error::{NmpcError, Result};
use crate::model::{clamp_control, Control, ControlBounds, Pose};
use crate::ocp::{
    max_violation, objective_and_gradient, obstacle_violations, penalized_objective, rollout,
    total_cost, ControlSequence, OcpSpec,
};

/// Evaluation cap for [`solve_bruteforce`].
pub const BRUTEFORCE_LIMIT: u128 = 10_000_000;

const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of penalty weights tried (`mu_init · mu_growth^i`).
    pub max_outer_iters: usize,
    /// Descent steps allowed per penalty weight.
    pub max_inner_iters: usize,
    pub mu_init: f64,
    pub mu_growth: f64,
    /// Stop when the projected-gradient infinity norm falls below this.
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    /// Wall-clock cap in seconds.
    pub time_budget: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 4,
            max_inner_iters: 2000,
            mu_init: 10.0,
            mu_growth: 10.0,
            grad_tol: 1e-4,
            step_init: 1.0,
            armijo_c: 1e-4,
            time_budget: 0.4,
        }
    }
}

impl SolverConfig {
    /// Defaults with the wall-clock budget set to 80% of the sampling time.
    pub fn for_sampling_time(dt: f64) -> Self {
        Self {
            time_budget: 0.8 * dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(NmpcError::InvalidConfig(m.to_string()));
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return err("iteration limits must be positive");
        }
        if !(self.mu_init > 0.0) {
            return err("mu_init must be positive");
        }
        if !(self.mu_growth > 1.0) {
            return err("mu_growth must exceed 1");
        }
        if !(self.grad_tol > 0.0 && self.step_init > 0.0 && self.time_budget > 0.0) {
            return err("grad_tol, step_init and time_budget must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return err("armijo_c must lie in (0, 1)");
        }
        Ok(())
    }

    /// Penalty weight of the last outer iteration.
    pub fn final_mu(&self) -> f64 {
        self.mu_init * self.mu_growth.powi(self.max_outer_iters as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    BudgetExhausted,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::BudgetExhausted => "budget_exhausted",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub w_opt: ControlSequence,
    /// Penalized objective at `w_opt` with `penalty_weight`.
    pub cost: f64,
    /// Unpenalized tracking cost at `w_opt`.
    pub tracking_cost: f64,
    /// Largest keep-out violation along the predicted trajectory, meters.
    pub max_violation: f64,
    pub penalty_weight: f64,
    pub iterations: usize,
    /// Wall-clock seconds.
    pub solve_time: f64,
    pub status: SolveStatus,
    /// The initial pose already lies inside a hard obstacle radius.
    pub infeasible_start: bool,
}

/// Elementwise projection onto the control box.
pub fn project_to_bounds(w: &ControlSequence, bounds: &ControlBounds) -> ControlSequence {
    ControlSequence(w.iter().map(|u| clamp_control(*u, bounds)).collect())
}

fn start_is_infeasible(spec: &OcpSpec, x0: Pose) -> bool {
    obstacle_violations(spec, &[x0])
        .into_iter()
        .any(|g| g > spec.safety_margin)
}

fn dot(a: &[Control], b: &[Control]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.v * q.v + p.omega * q.omega)
        .sum()
}

fn diff(a: &[Control], b: &[Control]) -> Vec<Control> {
    a.iter()
        .zip(b)
        .map(|(p, q)| Control::new(p.v - q.v, p.omega - q.omega))
        .collect()
}

fn projected_step(
    w: &[Control],
    g: &[Control],
    alpha: f64,
    bounds: &ControlBounds,
) -> Vec<Control> {
    w.iter()
        .zip(g)
        .map(|(u, d)| {
            clamp_control(
                Control::new(u.v - alpha * d.v, u.omega - alpha * d.omega),
                bounds,
            )
        })
        .collect()
}

/// Infinity norm of `P(w - g) - w`.
fn projected_gradient_norm(w: &[Control], g: &[Control], bounds: &ControlBounds) -> f64 {
    projected_step(w, g, 1.0, bounds)
        .iter()
        .zip(w)
        .map(|(p, u)| (p.v - u.v).abs().max((p.omega - u.omega).abs()))
        .fold(0.0, f64::max)
}

struct Effort {
    iterations: usize,
    started: Instant,
    budget: Duration,
}

/// Projected gradient descent at a fixed penalty weight.
fn descend(
    spec: &OcpSpec,
    x0: Pose,
    mut w: Vec<Control>,
    mu: f64,
    config: &SolverConfig,
    spent: &mut Effort,
) -> Result<(Vec<Control>, SolveStatus)> {
    let bounds = spec.bounds;
    let seq = ControlSequence(w);
    let (mut f, mut g) = objective_and_gradient(spec, x0, &seq, mu)?;
    w = seq.0;
    let mut alpha = config.step_init;
    for _ in 0..config.max_inner_iters {
        if spent.started.elapsed() >= spent.budget {
            return Ok((w, SolveStatus::BudgetExhausted));
        }
        if projected_gradient_norm(&w, &g, &bounds) <= config.grad_tol {
            return Ok((w, SolveStatus::Converged));
        }
        // backtracking
        let mut accepted = None;
        while alpha >= MIN_STEP {
            let cand = projected_step(&w, &g, alpha, &bounds);
            let d = diff(&cand, &w);
            let decrease = dot(&g, &d);
            let cand = ControlSequence(cand);
            let f_new = penalized_objective(spec, x0, &cand, mu)?;
            if f_new <= f + config.armijo_c * decrease {
                accepted = Some((cand, d));
                break;
            }
            alpha *= 0.5;
        }
        spent.iterations += 1;
        let Some((cand, s)) = accepted else {
            return Ok((w, SolveStatus::Converged));
        };
        let (f_new, g_new) = objective_and_gradient(spec, x0, &cand, mu)?;
        let y = diff(&g_new, &g);
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(MIN_STEP, MAX_STEP)
        } else {
            config.step_init
        };
        w = cand.0;
        f = f_new;
        g = g_new;
    }
    Ok((w, SolveStatus::IterationLimit))
}

/// Minimizes the penalized objective from `w_init`.
///
/// The returned sequence always satisfies the control bounds, and its
/// penalized objective at the final penalty weight is no larger than that of
/// `w_init`.
pub fn solve(
    spec: &OcpSpec,
    x0: Pose,
    w_init: &ControlSequence,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let started = Instant::now();
    let budget = Duration::from_secs_f64(config.time_budget);
    if w_init.len() != spec.horizon {
        return Err(NmpcError::DimensionMismatch {
            expected: spec.horizon,
            found: w_init.len(),
        });
    }
    let bounds = spec.bounds;
    let start = project_to_bounds(w_init, &bounds);
    let mut w = start.0.clone();
    let mut mu = config.mu_init;
    let mut spent = Effort {
        iterations: 0,
        started,
        budget,
    };
    let mut status = SolveStatus::IterationLimit;
    for outer in 0..config.max_outer_iters {
        if outer > 0 {
            mu *= config.mu_growth;
        }
        let (next, exit) = descend(spec, x0, w, mu, config, &mut spent)?;
        w = next;
        status = exit;
        if status == SolveStatus::BudgetExhausted {
            break;
        }
        let traj = rollout(spec, x0, &ControlSequence(w.clone()))?;
        if max_violation(spec, &traj) <= 0.0 {
            break;
        }
    }

    let mut w_opt = project_to_bounds(&ControlSequence(w), &bounds);
    let mut cost = penalized_objective(spec, x0, &w_opt, mu)?;
    let start_cost = penalized_objective(spec, x0, &start, mu)?;
    if start_cost < cost {
        // The continuation path ended in a worse basin than the initial
        // guess (typically a trajectory dragged through an obstacle while the
        // weight was small). Descend from the initial guess at the final weight.
        w_opt = start.clone();
        cost = start_cost;
        if status != SolveStatus::BudgetExhausted {
            let (retry, exit) = descend(spec, x0, start.0.clone(), mu, config, &mut spent)?;
            status = exit;
            let retry = project_to_bounds(&ControlSequence(retry), &bounds);
            let retry_cost = penalized_objective(spec, x0, &retry, mu)?;
            if retry_cost <= cost {
                w_opt = retry;
                cost = retry_cost;
            }
        }
    }
    let iterations = spent.iterations;
    let traj = rollout(spec, x0, &w_opt)?;
    Ok(SolveResult {
        tracking_cost: total_cost(spec, x0, &w_opt)?,
        max_violation: max_violation(spec, &traj),
        w_opt,
        cost,
        penalty_weight: mu,
        iterations,
        solve_time: started.elapsed().as_secs_f64(),
        status,
        infeasible_start: start_is_infeasible(spec, x0),
    })
}

/// Grid values `lo, …, hi` with `levels` points.
pub fn grid_axis(lo: f64, hi: f64, levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|i| lo + (hi - lo) * i as f64 / (levels - 1) as f64)
        .collect()
}

/// Exhaustive search over a `levels × levels` grid per control, evaluated with
/// penalty weight `mu`. Exponential in the horizon; guarded by
/// [`BRUTEFORCE_LIMIT`].
pub fn solve_bruteforce(spec: &OcpSpec, x0: Pose, levels: usize, mu: f64) -> Result<SolveResult> {
    if levels < 2 {
        return Err(NmpcError::InvalidConfig(
            "brute force needs at least 2 levels per axis".into(),
        ));
    }
    let n = spec.horizon;
    let evaluations = (levels as u128)
        .checked_pow(2 * n as u32)
        .unwrap_or(u128::MAX);
    if evaluations > BRUTEFORCE_LIMIT {
        return Err(NmpcError::ProblemTooLarge {
            evaluations,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let started = Instant::now();
    let b = spec.bounds;
    let vs = grid_axis(b.v_min, b.v_max, levels);
    let ws = grid_axis(b.omega_min, b.omega_max, levels);

    // odometer over 2N digits: digit 2k indexes v_k, digit 2k+1 indexes ω_k
    let mut digits = vec![0usize; 2 * n];
    let mut w = ControlSequence(vec![Control::new(vs[0], ws[0]); n]);
    let mut best = (f64::INFINITY, w.clone());
    loop {
        for k in 0..n {
            w.0[k] = Control::new(vs[digits[2 * k]], ws[digits[2 * k + 1]]);
        }
        let f = penalized_objective(spec, x0, &w, mu)?;
        if f < best.0 {
            best = (f, w.clone());
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                let (cost, w_opt) = best;
                let traj = rollout(spec, x0, &w_opt)?;
                return Ok(SolveResult {
                    tracking_cost: total_cost(spec, x0, &w_opt)?,
                    max_violation: max_violation(spec, &traj),
                    w_opt,
                    cost,
                    penalty_weight: mu,
                    iterations: evaluations as usize,
                    solve_time: started.elapsed().as_secs_f64(),
                    status: SolveStatus::Converged,
                    infeasible_start: start_is_infeasible(spec, x0),
                });
            }
            digits[i] += 1;
            if digits[i] < levels {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
