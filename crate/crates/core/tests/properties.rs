//! Property suites for every module, 128 generated cases each.

use nmpc_testkit::properties::*;

const CASES: u32 = 128;

#[test]
fn zero_control_fixed_point_holds() {
    zero_control_fixed_point(CASES).unwrap();
}

#[test]
fn rotation_equivariance_holds() {
    rotation_equivariance(CASES).unwrap();
}

#[test]
fn step_closed_form_holds() {
    step_closed_form(CASES).unwrap();
}

#[test]
fn wrap_range_and_idempotence_holds() {
    wrap_range_and_idempotence(CASES).unwrap();
}

#[test]
fn clamp_idempotent_non_expansive_holds() {
    clamp_idempotent_non_expansive(CASES).unwrap();
}

#[test]
fn rollout_matches_reference_holds() {
    rollout_matches_reference(CASES).unwrap();
}

#[test]
fn cost_nonnegative_holds() {
    cost_nonnegative(CASES).unwrap();
}

#[test]
fn cost_zero_iff_on_reference_holds() {
    cost_zero_iff_on_reference(CASES).unwrap();
}

#[test]
fn penalty_monotone_in_weight_holds() {
    penalty_monotone_in_weight(CASES).unwrap();
}

#[test]
fn violations_translation_equivariant_holds() {
    violations_translation_equivariant(CASES).unwrap();
}

#[test]
fn gradient_matches_finite_differences_holds() {
    gradient_matches_finite_differences(CASES).unwrap();
}

#[test]
fn solver_bounds_and_safeguard_holds() {
    solver_bounds_and_safeguard(CASES).unwrap();
}

#[test]
fn solver_monotone_in_iterations_holds() {
    solver_monotone_in_iterations(CASES).unwrap();
}

#[test]
fn solver_deterministic_holds() {
    solver_deterministic(CASES).unwrap();
}

#[test]
fn solver_budget_honest_holds() {
    solver_budget_honest(CASES).unwrap();
}

#[test]
fn controller_step_shape_holds() {
    controller_step_shape(CASES).unwrap();
}

#[test]
fn seeded_reproducibility_holds() {
    seeded_reproducibility(CASES).unwrap();
}

#[test]
fn zero_noise_determinism_holds() {
    zero_noise_determinism(CASES).unwrap();
}

#[test]
fn closed_loop_log_consistency_holds() {
    closed_loop_log_consistency(CASES).unwrap();
}

#[test]
fn metric_translation_invariance_holds() {
    metric_translation_invariance(CASES).unwrap();
}

#[test]
fn metric_bounds_holds() {
    metric_bounds(CASES).unwrap();
}

#[test]
fn polyline_distance_matches_dense_sampling_holds() {
    polyline_distance_matches_dense_sampling(CASES).unwrap();
}
