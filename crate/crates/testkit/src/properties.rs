//! Property suites, one function per invariant. Each runs `cases` generated
//! inputs through a deterministic proptest runner and reports the first
//! failure (after shrinking) as text.

use std::f64::consts::{PI, TAU};
use std::fmt::Debug;

use nmpc_core::controller::{Controller, RunStatus, WaypointPlan};
use nmpc_core::metrics::{distance_to_polyline, RunMetrics};
use nmpc_core::model::ModelParams;
use nmpc_core::ocp::{
    objective_gradient, obstacle_violations, penalized_objective, rollout, total_cost, Obstacle,
    Reference,
};
use nmpc_core::sim::{Actuation, LogRow, Outcome, TrajectoryLog};
use nmpc_core::solver::{solve, solve_bruteforce, SolverConfig};
use nmpc_core::{
    clamp_control, euler_step, run_scenario, wrap_angle, Control, ControlSequence, NoiseModel,
    OcpSpec, Pose,
};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use crate::oracles;
use crate::strategies::{
    any_control, bounds, instance, pose, pose_in, positive_weights, small_scenario,
};

fn run<S>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// A property suite with a stable name.
#[derive(Clone, Copy)]
pub struct Property {
    pub name: &'static str,
    pub run: fn(u32) -> Result<(), String>,
}

pub const SUITE: &[Property] = &[
    Property {
        name: "model: zero control is a fixed point",
        run: zero_control_fixed_point,
    },
    Property {
        name: "model: rotation equivariance",
        run: rotation_equivariance,
    },
    Property {
        name: "model: step matches closed form",
        run: step_closed_form,
    },
    Property {
        name: "model: wrap range and idempotence",
        run: wrap_range_and_idempotence,
    },
    Property {
        name: "model: clamp idempotent and non-expansive",
        run: clamp_idempotent_non_expansive,
    },
    Property {
        name: "ocp: rollout starts at x0 and matches reference",
        run: rollout_matches_reference,
    },
    Property {
        name: "ocp: cost nonnegative",
        run: cost_nonnegative,
    },
    Property {
        name: "ocp: cost zero iff on reference",
        run: cost_zero_iff_on_reference,
    },
    Property {
        name: "ocp: penalty monotone in weight",
        run: penalty_monotone_in_weight,
    },
    Property {
        name: "ocp: violations translation-equivariant",
        run: violations_translation_equivariant,
    },
    Property {
        name: "ocp: gradient matches finite differences",
        run: gradient_matches_finite_differences,
    },
    Property {
        name: "solver: bounds hold and start never beaten",
        run: solver_bounds_and_safeguard,
    },
    Property {
        name: "solver: objective nonincreasing in iterations",
        run: solver_monotone_in_iterations,
    },
    Property {
        name: "solver: deterministic",
        run: solver_deterministic,
    },
    Property {
        name: "solver: budget honesty",
        run: solver_budget_honest,
    },
    Property {
        name: "controller: warm-start shape and first control",
        run: controller_step_shape,
    },
    Property {
        name: "sim: seeded bit-reproducibility",
        run: seeded_reproducibility,
    },
    Property {
        name: "sim: zero-noise determinism",
        run: zero_noise_determinism,
    },
    Property {
        name: "sim: log consistency and collision soundness",
        run: closed_loop_log_consistency,
    },
    Property {
        name: "metrics: translation invariance",
        run: metric_translation_invariance,
    },
    Property {
        name: "metrics: avg <= max and rotation range",
        run: metric_bounds,
    },
    Property {
        name: "metrics: polyline distance matches dense sampling",
        run: polyline_distance_matches_dense_sampling,
    },
];

fn dt() -> impl Strategy<Value = f64> {
    1e-3..2.0f64
}

pub fn zero_control_fixed_point(cases: u32) -> Result<(), String> {
    run(cases, (pose(), dt()), |(s, dt)| {
        prop_assert_eq!(euler_step(s, Control::ZERO, ModelParams::new(dt)), s);
        Ok(())
    })
}

pub fn rotation_equivariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (pose(), any_control(), dt(), -PI..PI),
        |(s, u, dt, phi)| {
            let (sn, cs) = phi.sin_cos();
            let rot = |p: Pose| Pose::new(p.x * cs - p.y * sn, p.x * sn + p.y * cs, p.theta + phi);
            let p = ModelParams::new(dt);
            let a = euler_step(rot(s), u, p);
            let b = rot(euler_step(s, u, p));
            prop_assert!((a.x - b.x).abs() <= 1e-12, "x {} vs {}", a.x, b.x);
            prop_assert!((a.y - b.y).abs() <= 1e-12, "y {} vs {}", a.y, b.y);
            prop_assert!(
                (a.theta - b.theta).abs() <= 1e-12,
                "theta {} vs {}",
                a.theta,
                b.theta
            );
            Ok(())
        },
    )
}

pub fn step_closed_form(cases: u32) -> Result<(), String> {
    run(cases, (pose(), any_control(), dt()), |(s, u, dt)| {
        let next = euler_step(s, u, ModelParams::new(dt));
        prop_assert_eq!(next.x, s.x + dt * u.v * s.theta.cos());
        prop_assert_eq!(next.y, s.y + dt * u.v * s.theta.sin());
        prop_assert_eq!(next.theta, s.theta + dt * u.omega);
        Ok(())
    })
}

pub fn wrap_range_and_idempotence(cases: u32) -> Result<(), String> {
    let angles = prop_oneof![
        -1e3..1e3f64,
        (-60i32..60).prop_map(|k| k as f64 * PI),
        (-60i32..60).prop_map(|k| k as f64 * TAU)
    ];
    run(cases, angles, |a| {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI, "wrap({a}) = {w}");
        prop_assert_eq!(wrap_angle(w), w);
        // same direction on the circle
        prop_assert!((w.sin() - a.sin()).abs() < 1e-9 && (w.cos() - a.cos()).abs() < 1e-9);
        Ok(())
    })
}

pub fn clamp_idempotent_non_expansive(cases: u32) -> Result<(), String> {
    run(cases, (any_control(), bounds()), |(u, b)| {
        let c = clamp_control(u, &b);
        prop_assert_eq!(clamp_control(c, &b), c);
        prop_assert!(c.v.abs() <= u.v.abs() && c.omega.abs() <= u.omega.abs());
        prop_assert!(b.contains(&c));
        Ok(())
    })
}

pub fn rollout_matches_reference(cases: u32) -> Result<(), String> {
    run(cases, instance(vec![1, 5, 20], false), |(spec, x0, w)| {
        let traj = rollout(&spec, x0, &w).unwrap();
        prop_assert_eq!(traj[0], x0);
        let reference = oracles::reference_rollout(x0, &w.0, spec.params.dt);
        prop_assert_eq!(traj.len(), reference.len());
        for (a, b) in traj.iter().zip(&reference) {
            prop_assert!(
                (a.x - b.x).abs() <= 1e-12
                    && (a.y - b.y).abs() <= 1e-12
                    && (a.theta - b.theta).abs() <= 1e-12
            );
        }
        Ok(())
    })
}

pub fn cost_nonnegative(cases: u32) -> Result<(), String> {
    run(cases, instance(vec![1, 5, 20], true), |(spec, x0, w)| {
        prop_assert!(total_cost(&spec, x0, &w).unwrap() >= 0.0);
        Ok(())
    })
}

#[derive(Debug, Clone, Copy)]
enum Nudge {
    None,
    /// Whole turns added to the start heading.
    Turns(i32),
    State(usize, f64),
    Control(usize, usize, f64),
}

pub fn cost_zero_iff_on_reference(cases: u32) -> Result<(), String> {
    let magnitude = prop_oneof![1e-6..1.0f64, -1.0..-1e-6f64];
    let nudge = prop_oneof![
        Just(Nudge::None),
        (-3i32..=3).prop_map(Nudge::Turns),
        (0usize..3, magnitude.clone()).prop_map(|(i, d)| Nudge::State(i, d)),
        (0usize..20, 0usize..2, magnitude).prop_map(|(k, i, d)| Nudge::Control(k, i, d)),
    ];
    let strategy = (
        positive_weights(),
        pose_in(3.0),
        1usize..=20,
        prop_oneof![Just(0.1), Just(0.5)],
        nudge,
    );
    run(cases, strategy, |(weights, target, n, dt, nudge)| {
        let mut spec = OcpSpec::new(n, dt, target);
        spec.weights = weights;
        let mut x0 = target;
        let mut w = ControlSequence::zeros(n);
        match nudge {
            Nudge::None => {}
            Nudge::Turns(k) => x0.theta += k as f64 * TAU,
            Nudge::State(0, d) => x0.x += d,
            Nudge::State(1, d) => x0.y += d,
            Nudge::State(_, d) => x0.theta += d,
            Nudge::Control(k, 0, d) => w.0[k % n].v = d,
            Nudge::Control(k, _, d) => w.0[k % n].omega = d,
        }
        let cost = total_cost(&spec, x0, &w).unwrap();
        // states 0..N-1 carry cost, the terminal state does not
        let states = oracles::reference_rollout(x0, &w.0, dt);
        let on_reference = states[..n].iter().all(|s| {
            s.x == target.x && s.y == target.y && wrap_angle(s.theta - target.theta) == 0.0
        }) && w.iter().all(|u| *u == Control::ZERO);
        prop_assert_eq!(cost == 0.0, on_reference, "cost {} for {:?}", cost, nudge);
        Ok(())
    })
}

pub fn penalty_monotone_in_weight(cases: u32) -> Result<(), String> {
    run(
        cases,
        (instance(vec![1, 5, 20], true), 0.0..1e4f64, 0.0..1e4f64),
        |((spec, x0, w), a, b)| {
            let (lo, hi) = (a.min(b), a.max(b));
            let f_lo = penalized_objective(&spec, x0, &w, lo).unwrap();
            let f_hi = penalized_objective(&spec, x0, &w, hi).unwrap();
            prop_assert!(f_lo <= f_hi, "{f_lo} > {f_hi}");
            Ok(())
        },
    )
}

pub fn violations_translation_equivariant(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            instance(vec![1, 5, 20], true),
            -100.0..100.0f64,
            -100.0..100.0f64,
        ),
        |((spec, x0, w), dx, dy)| {
            let traj = rollout(&spec, x0, &w).unwrap();
            let g = obstacle_violations(&spec, &traj);
            let mut moved = spec.clone();
            moved.obstacles = spec
                .obstacles
                .iter()
                .map(|o| Obstacle::new(o.x + dx, o.y + dy, o.radius))
                .collect();
            let traj_moved: Vec<Pose> = traj
                .iter()
                .map(|p| Pose::new(p.x + dx, p.y + dy, p.theta))
                .collect();
            let g_moved = obstacle_violations(&moved, &traj_moved);
            prop_assert_eq!(g.len(), g_moved.len());
            for (a, b) in g.iter().zip(&g_moved) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            Ok(())
        },
    )
}

pub fn gradient_matches_finite_differences(cases: u32) -> Result<(), String> {
    let instances = prop_oneof![
        instance(vec![1, 5, 20], false),
        instance(vec![1, 5, 20], true)
    ];
    run(cases, (instances, 0.0..1e3f64), |((spec, x0, w), mu)| {
        let adjoint = objective_gradient(&spec, x0, &w, mu).unwrap();
        let fd = oracles::central_difference_gradient(&spec, x0, &w, mu, 1e-6);
        prop_assert!(
            oracles::gradients_agree(&adjoint, &fd, 1e-5, 1e-8),
            "adjoint {:?}\nfinite differences {:?}",
            adjoint,
            fd
        );
        Ok(())
    })
}

fn quick_config() -> SolverConfig {
    SolverConfig {
        max_inner_iters: 200,
        time_budget: 60.0,
        ..SolverConfig::default()
    }
}

pub fn solver_bounds_and_safeguard(cases: u32) -> Result<(), String> {
    let strategy = (instance(vec![1, 3, 8], true), vec(any_control(), 8));
    run(cases, strategy, |((spec, x0, _), raw)| {
        let init = ControlSequence(raw[..spec.horizon].to_vec());
        let config = quick_config();
        let r = solve(&spec, x0, &init, &config).unwrap();
        prop_assert!(r.w_opt.iter().all(|u| spec.bounds.contains(u)));
        let start = ControlSequence(
            init.iter()
                .map(|u| clamp_control(*u, &spec.bounds))
                .collect(),
        );
        let f_start = penalized_objective(&spec, x0, &start, r.penalty_weight).unwrap();
        prop_assert!(r.cost <= f_start, "{} > start {}", r.cost, f_start);
        Ok(())
    })
}

pub fn solver_monotone_in_iterations(cases: u32) -> Result<(), String> {
    run(
        cases,
        (instance(vec![3, 8], true), 1usize..40),
        |((spec, x0, w), k)| {
            let at = |iters: usize| {
                let config = SolverConfig {
                    max_outer_iters: 1,
                    max_inner_iters: iters,
                    time_budget: 60.0,
                    ..SolverConfig::default()
                };
                let r = solve(&spec, x0, &w, &config).unwrap();
                penalized_objective(&spec, x0, &r.w_opt, config.mu_init).unwrap()
            };
            let (a, b) = (at(k), at(k + 1));
            prop_assert!(b <= a, "{k} iterations: {a}, {} iterations: {b}", k + 1);
            Ok(())
        },
    )
}

pub fn solver_deterministic(cases: u32) -> Result<(), String> {
    run(cases, instance(vec![1, 5, 20], true), |(spec, x0, w)| {
        let config = quick_config();
        let mut a = solve(&spec, x0, &w, &config).unwrap();
        let mut b = solve(&spec, x0, &w, &config).unwrap();
        a.solve_time = 0.0;
        b.solve_time = 0.0;
        prop_assert_eq!(a, b);
        Ok(())
    })
}

/// The cap may be overrun by one inner iteration; 5 ms more absorbs
/// scheduler preemption on a loaded machine.
pub fn solver_budget_honest(cases: u32) -> Result<(), String> {
    run(
        cases,
        (instance(vec![20], true), 1e-4..5e-3f64),
        |((spec, x0, w), budget)| {
            let one = SolverConfig {
                max_outer_iters: 1,
                max_inner_iters: 1,
                time_budget: 60.0,
                ..SolverConfig::default()
            };
            let iteration = solve(&spec, x0, &w, &one).unwrap().solve_time;
            let config = SolverConfig {
                time_budget: budget,
                ..SolverConfig::default()
            };
            let r = solve(&spec, x0, &w, &config).unwrap();
            prop_assert!(
                r.solve_time <= budget + iteration + 5e-3,
                "{} > {} + {}",
                r.solve_time,
                budget,
                iteration
            );
            Ok(())
        },
    )
}

pub fn controller_step_shape(cases: u32) -> Result<(), String> {
    let strategy = (
        instance(vec![1, 4, 8], true),
        vec(pose_in(3.0), 1..=3),
        vec(pose_in(3.0), 1..6),
    );
    run(
        cases,
        strategy,
        |((spec, _, _), waypoints, measurements)| {
            let n = spec.horizon;
            let plan = WaypointPlan::new(waypoints).unwrap();
            let mut ctrl = Controller::new(spec, plan, Default::default(), quick_config());
            let mut index = 0;
            for m in measurements {
                if ctrl.update(&m) != RunStatus::Running {
                    break;
                }
                prop_assert!(ctrl.state.current_waypoint_index >= index);
                index = ctrl.state.current_waypoint_index;
                let out = ctrl.step(m).unwrap();
                prop_assert_eq!(ctrl.state.last_solution.len(), n);
                prop_assert_eq!(out.solve.w_opt.len(), n);
                prop_assert_eq!(Some(out.control), out.solve.w_opt.first());
                prop_assert_eq!(ctrl.state.last_solution.first(), Some(out.control));
                prop_assert!(ctrl.spec.bounds.contains(&out.control));
            }
            Ok(())
        },
    )
}

fn strip_timing(mut log: TrajectoryLog) -> TrajectoryLog {
    log.wall_time = 0.0;
    for row in &mut log.rows {
        if let Some(a) = row.actuation.as_mut() {
            a.solve_time = 0.0;
        }
    }
    log
}

pub fn seeded_reproducibility(cases: u32) -> Result<(), String> {
    run(cases, small_scenario(), |scn| {
        let a = run_scenario(&scn, &quick_config()).unwrap();
        let b = run_scenario(&scn, &quick_config()).unwrap();
        prop_assert_eq!(strip_timing(a), strip_timing(b));
        Ok(())
    })
}

pub fn zero_noise_determinism(cases: u32) -> Result<(), String> {
    run(cases, small_scenario(), |mut scn| {
        scn.noise = NoiseModel::none();
        let a = run_scenario(&scn, &quick_config()).unwrap();
        scn.noise.seed = scn.noise.seed.wrapping_add(1);
        let b = run_scenario(&scn, &quick_config()).unwrap();
        prop_assert_eq!(strip_timing(a), strip_timing(b));
        Ok(())
    })
}

pub fn closed_loop_log_consistency(cases: u32) -> Result<(), String> {
    run(cases, small_scenario(), |scn| {
        let log = run_scenario(&scn, &quick_config()).unwrap();
        let params = ModelParams::new(scn.dt);
        prop_assert!(!log.rows.is_empty());
        for (k, row) in log.rows.iter().enumerate() {
            prop_assert_eq!(row.t, k as f64 * scn.dt);
        }
        let (last, body) = log.rows.split_last().unwrap();
        prop_assert!(last.actuation.is_none());
        prop_assert!(body.iter().all(|r| r.actuation.is_some()));
        prop_assert_eq!(log.applied_controls().count(), log.rows.len() - 1);
        for pair in log.rows.windows(2) {
            let a = pair[0].actuation.as_ref().unwrap();
            prop_assert!(scn.bounds.contains(&a.applied) && scn.bounds.contains(&a.commanded));
            prop_assert_eq!(
                euler_step(pair[0].true_pose, a.applied, params),
                pair[1].true_pose
            );
            prop_assert!(pair[1].waypoint_index >= pair[0].waypoint_index);
        }
        let clear = |p: &Pose| {
            scn.obstacles
                .iter()
                .all(|o| o.center_distance(p) >= scn.robot_radius + o.radius)
        };
        match log.outcome {
            Outcome::Collision => prop_assert!(!clear(&last.true_pose)),
            _ => prop_assert!(log.rows.iter().all(|r| clear(&r.true_pose))),
        }
        if log.outcome == Outcome::Success {
            let m = RunMetrics::compute(&log, &scn.planned_path(), &scn.target(), &scn.obstacles);
            for o in &scn.obstacles {
                let d = log
                    .true_positions()
                    .map(|p| o.center_distance(&p))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d >= scn.robot_radius + o.radius);
            }
            if let Some(d) = m.min_obstacle_distance {
                let smallest = scn
                    .obstacles
                    .iter()
                    .map(|o| o.radius)
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d >= scn.robot_radius + smallest);
            }
        }
        Ok(())
    })
}

fn synthetic_log(poses: &[Pose], dt: f64, outcome: Outcome) -> TrajectoryLog {
    let rows = poses
        .iter()
        .enumerate()
        .map(|(k, p)| LogRow {
            t: k as f64 * dt,
            true_pose: *p,
            measured_pose: *p,
            waypoint_index: 0,
            actuation: (k + 1 < poses.len()).then_some(Actuation {
                commanded: Control::ZERO,
                applied: Control::ZERO,
                solve_time: 0.001 * k as f64,
                status: Ok(nmpc_core::SolveStatus::Converged),
            }),
        })
        .collect();
    TrajectoryLog {
        dt,
        rows,
        outcome,
        wall_time: 0.0,
    }
}

fn metric_inputs() -> impl Strategy<Value = (Vec<Pose>, Vec<Pose>, Vec<Obstacle>)> {
    (
        vec(pose_in(5.0), 1..30),
        vec(pose_in(5.0), 1..5),
        vec(
            (-5.0..5.0f64, -5.0..5.0f64, 0.05..1.0f64).prop_map(|(x, y, r)| Obstacle::new(x, y, r)),
            0..3,
        ),
    )
}

fn metrics_of(poses: &[Pose], plan: &[Pose], obstacles: &[Obstacle]) -> RunMetrics {
    let log = synthetic_log(poses, 0.5, Outcome::Success);
    let plan = WaypointPlan::new(plan.to_vec()).unwrap();
    RunMetrics::compute(&log, &plan, &plan.last(), obstacles)
}

pub fn metric_translation_invariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (metric_inputs(), -50.0..50.0f64, -50.0..50.0f64),
        |((poses, plan, obstacles), dx, dy)| {
            let shift = |p: &Pose| Pose::new(p.x + dx, p.y + dy, p.theta);
            let a = metrics_of(&poses, &plan, &obstacles);
            let b = metrics_of(
                &poses.iter().map(shift).collect::<Vec<_>>(),
                &plan.iter().map(shift).collect::<Vec<_>>(),
                &obstacles
                    .iter()
                    .map(|o| Obstacle::new(o.x + dx, o.y + dy, o.radius))
                    .collect::<Vec<_>>(),
            );
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9;
            prop_assert!(close(
                a.euclidean_position_error,
                b.euclidean_position_error
            ));
            prop_assert!(close(a.rotation_error, b.rotation_error));
            prop_assert!(close(a.max_trajectory_error, b.max_trajectory_error));
            prop_assert!(close(a.avg_trajectory_error, b.avg_trajectory_error));
            match (a.min_obstacle_distance, b.min_obstacle_distance) {
                (Some(x), Some(y)) => prop_assert!(close(x, y)),
                (x, y) => prop_assert_eq!(x, y),
            }
            prop_assert_eq!(a.total_time, b.total_time);
            prop_assert_eq!(a.max_solve_time, b.max_solve_time);
            Ok(())
        },
    )
}

pub fn metric_bounds(cases: u32) -> Result<(), String> {
    run(cases, metric_inputs(), |(poses, plan, obstacles)| {
        let m = metrics_of(&poses, &plan, &obstacles);
        prop_assert!(m.avg_trajectory_error <= m.max_trajectory_error);
        prop_assert!((0.0..=PI).contains(&m.rotation_error));
        prop_assert!(m.euclidean_position_error >= 0.0);
        Ok(())
    })
}

pub fn polyline_distance_matches_dense_sampling(cases: u32) -> Result<(), String> {
    let verts = vec((-5.0..5.0f64, -5.0..5.0f64), 1..6);
    run(
        cases,
        (verts, (-6.0..6.0f64, -6.0..6.0f64)),
        |(verts, p)| {
            let exact = distance_to_polyline(p, &verts);
            let dense = oracles::dense_polyline_distance(p, &verts, 1e-3);
            prop_assert!((exact - dense).abs() <= 1e-3, "exact {exact} dense {dense}");
            prop_assert!(exact <= dense + 1e-12);
            Ok(())
        },
    )
}

/// Solver against the exhaustive grid at the final penalty weight. Returns
/// `(solver objective, grid objective, slack)` for each instance.
pub fn solver_vs_bruteforce(instances: u32, levels: usize) -> Result<Vec<(f64, f64, f64)>, String> {
    let strategy = (
        prop_oneof![Just(1usize), Just(2usize)],
        pose_in(2.0),
        pose_in(2.0),
        prop_oneof![Just(0.25), Just(0.5)],
        vec((-1.0..1.0f64, -1.0..1.0f64, 0.05..0.3f64), 0..=1),
    )
        .prop_map(|(n, x0, target, dt, obs)| {
            let mut spec = OcpSpec::new(n, dt, target);
            spec.reference = Reference::at(target);
            spec.robot_radius = 0.15;
            spec.safety_margin = 0.05;
            spec.obstacles = obs
                .into_iter()
                .map(|(x, y, r)| Obstacle::new(x0.x + x, x0.y + y, r))
                .collect();
            (spec, x0)
        });
    let records = std::sync::Mutex::new(Vec::new());
    run(instances, strategy, |(spec, x0)| {
        let config = SolverConfig {
            time_budget: 60.0,
            ..SolverConfig::default()
        };
        let mu = config.final_mu();
        let r = solve(&spec, x0, &ControlSequence::zeros(spec.horizon), &config).unwrap();
        let f_solve = penalized_objective(&spec, x0, &r.w_opt, mu).unwrap();
        let grid = solve_bruteforce(&spec, x0, levels, mu).unwrap();
        let slack = oracles::grid_cell_slack_near(&spec, x0, mu, levels, &grid.w_opt);
        prop_assert!(
            f_solve <= grid.cost + slack,
            "solver {f_solve} grid {} slack {slack}",
            grid.cost
        );
        records.lock().unwrap().push((f_solve, grid.cost, slack));
        Ok(())
    })?;
    Ok(records.into_inner().unwrap())
}
