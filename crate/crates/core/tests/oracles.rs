//! Checks against independent references: finite differences for the
//! gradient, exhaustive grid search for the solver.

use nmpc_core::ocp::objective_gradient;
use nmpc_testkit::oracles::{central_difference_gradient, gradients_agree};
use nmpc_testkit::properties::{gradient_matches_finite_differences, solver_vs_bruteforce};
use nmpc_testkit::strategies::instance;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

#[test]
fn adjoint_gradient_matches_central_differences() {
    gradient_matches_finite_differences(200).unwrap();
}

#[test]
fn gradient_oracle_covers_every_horizon_with_active_penalties() {
    // the randomized suite above draws N from {1, 5, 20}; make sure each
    // horizon is hit with obstacles present and a nonzero penalty weight
    let mut runner = TestRunner::deterministic();
    for n in [1, 5, 20] {
        let strategy = instance(vec![n], true);
        let mut active = 0;
        for _ in 0..60 {
            let (spec, x0, w) = strategy.new_tree(&mut runner).unwrap().current();
            let traj = nmpc_core::ocp::rollout(&spec, x0, &w).unwrap();
            if nmpc_core::ocp::max_violation(&spec, &traj) > 0.0 {
                active += 1;
            }
            let g = objective_gradient(&spec, x0, &w, 100.0).unwrap();
            let fd = central_difference_gradient(&spec, x0, &w, 100.0, 1e-6);
            assert!(
                gradients_agree(&g, &fd, 1e-5, 1e-8),
                "N = {n}: {g:?} vs {fd:?}"
            );
        }
        assert!(active > 0, "no instance with an active keep-out at N = {n}");
    }
}

#[test]
fn solver_reaches_grid_optimum() {
    let records = solver_vs_bruteforce(24, 21).unwrap();
    assert_eq!(records.len(), 24);
}

#[test]
fn zero_weight_gradient_is_control_effort_only() {
    // with every state weight and the penalty off, the gradient is 2 R (u - u_ref)
    let mut runner = TestRunner::deterministic();
    let (mut spec, x0, w) = instance(vec![5], true)
        .new_tree(&mut runner)
        .unwrap()
        .current();
    spec.weights.q = [0.0; 3];
    let g = objective_gradient(&spec, x0, &w, 0.0).unwrap();
    for (gk, u) in g.iter().zip(w.iter()) {
        prop_assert_close(gk.v, 2.0 * spec.weights.r[0] * u.v);
        prop_assert_close(gk.omega, 2.0 * spec.weights.r[1] * u.omega);
    }
}

fn prop_assert_close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
}
