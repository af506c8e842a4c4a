use nmpc_core::model::ModelParams;
use nmpc_core::{
    Control, ControlBounds, ControlSequence, NoiseModel, Obstacle, OcpSpec, Pose, Reference,
    Scenario, Weights,
};
use proptest::collection::vec;
use proptest::prelude::*;

pub fn pose_in(span: f64) -> impl Strategy<Value = Pose> {
    (-span..span, -span..span, -4.0..4.0f64).prop_map(|(x, y, t)| Pose::new(x, y, t))
}

pub fn pose() -> impl Strategy<Value = Pose> {
    pose_in(10.0)
}

/// Controls anywhere, including outside the default bounds.
pub fn any_control() -> impl Strategy<Value = Control> {
    (-2.0..2.0f64, -4.0..4.0f64).prop_map(|(v, w)| Control::new(v, w))
}

pub fn control_in(b: ControlBounds) -> impl Strategy<Value = Control> {
    (b.v_min..=b.v_max, b.omega_min..=b.omega_max).prop_map(|(v, w)| Control::new(v, w))
}

pub fn sequence(n: usize) -> impl Strategy<Value = ControlSequence> {
    vec(control_in(ControlBounds::default()), n).prop_map(ControlSequence)
}

/// Bounds that contain the origin.
pub fn bounds() -> impl Strategy<Value = ControlBounds> {
    (-1.0..=0.0f64, 0.0..1.0f64, -3.0..=0.0f64, 0.0..3.0f64).prop_map(
        |(v_min, v_max, omega_min, omega_max)| ControlBounds {
            v_min,
            v_max,
            omega_min,
            omega_max,
        },
    )
}

pub fn positive_weights() -> impl Strategy<Value = Weights> {
    (
        [0.01..10.0f64, 0.01..10.0, 0.01..10.0],
        [0.01..10.0f64, 0.01..10.0],
    )
        .prop_map(|(q, r)| Weights { q, r })
}

/// Up to three obstacles placed within about a meter of `near`, so keep-outs
/// are often active along short rollouts.
pub fn obstacles_near(near: Pose, max: usize) -> impl Strategy<Value = Vec<Obstacle>> {
    vec((-1.2..1.2f64, -1.2..1.2f64, 0.05..0.6f64), 0..=max).prop_map(move |v| {
        v.into_iter()
            .map(|(dx, dy, r)| Obstacle::new(near.x + dx, near.y + dy, r))
            .collect()
    })
}

/// A random problem instance `(spec, x0, w)` with horizon drawn from `horizons`.
pub fn instance(
    horizons: Vec<usize>,
    with_obstacles: bool,
) -> impl Strategy<Value = (OcpSpec, Pose, ControlSequence)> {
    (
        proptest::sample::select(horizons),
        pose_in(3.0),
        pose_in(3.0),
        positive_weights(),
        prop_oneof![Just(0.1), Just(0.25), Just(0.5)],
    )
        .prop_flat_map(move |(n, x0, target, weights, dt)| {
            let obs = if with_obstacles {
                obstacles_near(x0, 3).boxed()
            } else {
                Just(Vec::new()).boxed()
            };
            (
                Just((n, x0, target, weights, dt)),
                obs,
                sequence(n),
                0.0..0.3f64,
                0.0..0.1f64,
            )
        })
        .prop_map(
            |((n, x0, target, weights, dt), obstacles, w, robot_radius, safety_margin)| {
                let spec = OcpSpec {
                    horizon: n,
                    params: ModelParams::new(dt),
                    bounds: ControlBounds::default(),
                    weights,
                    reference: Reference::at(target),
                    obstacles,
                    robot_radius,
                    safety_margin,
                };
                (spec, x0, w)
            },
        )
}

/// Short single-target scenario, optionally with obstacles kept clear of
/// the start, and random noise.
pub fn small_scenario() -> impl Strategy<Value = Scenario> {
    (
        pose_in(1.0),
        pose_in(2.0),
        2usize..=6,
        prop_oneof![Just(0.25), Just(0.5)],
        vec((-2.0..2.0f64, -2.0..2.0f64, 0.05..0.3f64), 0..=2),
        0.0..0.2f64,
        0.0..0.05f64,
        any::<u64>(),
    )
        .prop_map(|(start, target, n, dt, obs, frac, sigma, seed)| {
            let mut s = Scenario::point_to_point("prop", start, target, dt, n);
            s.obstacles = obs
                .into_iter()
                .map(|(x, y, r)| Obstacle::new(x, y, r))
                .filter(|o| o.center_distance(&start) > s.robot_radius + o.radius + 0.2)
                .collect();
            s.noise = NoiseModel::new(frac, sigma, seed);
            s.criteria.max_wall_time = 5.0;
            s
        })
}
