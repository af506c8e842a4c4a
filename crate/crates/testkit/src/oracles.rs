//! Reference computations that avoid the code paths they check.

use nmpc_core::ocp::penalized_objective;
use nmpc_core::{Control, ControlSequence, OcpSpec, Pose};

/// Central-difference gradient of the penalized objective, one control entry
/// at a time.
pub fn central_difference_gradient(
    spec: &OcpSpec,
    x0: Pose,
    w: &ControlSequence,
    mu: f64,
    h: f64,
) -> Vec<Control> {
    let f = |w: &ControlSequence| penalized_objective(spec, x0, w, mu).expect("dimensions match");
    let mut grad = vec![Control::ZERO; w.len()];
    for (k, g) in grad.iter_mut().enumerate() {
        let nudged = |dv: f64, dw: f64| {
            let mut w = w.clone();
            w.0[k].v += dv;
            w.0[k].omega += dw;
            f(&w)
        };
        g.v = (nudged(h, 0.0) - nudged(-h, 0.0)) / (2.0 * h);
        g.omega = (nudged(0.0, h) - nudged(0.0, -h)) / (2.0 * h);
    }
    grad
}

fn flat(g: &[Control]) -> impl Iterator<Item = f64> + '_ {
    g.iter().flat_map(|c| [c.v, c.omega])
}

pub fn inf_norm(g: &[Control]) -> f64 {
    flat(g).fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn l2_norm(g: &[Control]) -> f64 {
    flat(g).map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖∞ ≤ abs + rel · max(‖a‖∞, ‖b‖∞)`.
pub fn gradients_agree(a: &[Control], b: &[Control], rel: f64, abs: f64) -> bool {
    let diff = flat(a)
        .zip(flat(b))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff <= abs + rel * inf_norm(a).max(inf_norm(b))
}

/// Explicit Euler recursion written out independently of the library.
pub fn reference_rollout(x0: Pose, w: &[Control], dt: f64) -> Vec<Pose> {
    let mut out = vec![x0];
    let (mut x, mut y, mut t) = (x0.x, x0.y, x0.theta);
    for u in w {
        let (nx, ny, nt) = (
            x + dt * u.v * t.cos(),
            y + dt * u.v * t.sin(),
            t + dt * u.omega,
        );
        x = nx;
        y = ny;
        t = nt;
        out.push(Pose::new(x, y, t));
    }
    out
}

/// Largest finite-difference gradient 2-norm of the penalized objective over
/// the grid points within one cell of `center` (all `3^(2N)` neighbors,
/// clipped to the control box). Meant for `N ≤ 2`.
pub fn local_lipschitz_estimate(
    spec: &OcpSpec,
    x0: Pose,
    mu: f64,
    center: &ControlSequence,
    dv: f64,
    dw: f64,
) -> f64 {
    let b = spec.bounds;
    let dims = 2 * spec.horizon;
    let mut best: f64 = 0.0;
    for idx in 0..3usize.pow(dims as u32) {
        let mut rest = idx;
        let mut w = center.clone();
        for u in w.0.iter_mut() {
            u.v = (u.v + dv * ((rest % 3) as f64 - 1.0)).clamp(b.v_min, b.v_max);
            rest /= 3;
            u.omega = (u.omega + dw * ((rest % 3) as f64 - 1.0)).clamp(b.omega_min, b.omega_max);
            rest /= 3;
        }
        let g = central_difference_gradient(spec, x0, &w, mu, 1e-6);
        best = best.max(l2_norm(&g));
    }
    best
}

/// One grid cell of objective change around the grid optimum `center`: the
/// local Lipschitz estimate times the diagonal of a cell of a
/// `levels`-per-axis grid over the control box.
pub fn grid_cell_slack_near(
    spec: &OcpSpec,
    x0: Pose,
    mu: f64,
    levels: usize,
    center: &ControlSequence,
) -> f64 {
    let b = spec.bounds;
    let dv = (b.v_max - b.v_min) / (levels - 1) as f64;
    let dw = (b.omega_max - b.omega_min) / (levels - 1) as f64;
    let diagonal = (spec.horizon as f64 * (dv * dv + dw * dw)).sqrt();
    local_lipschitz_estimate(spec, x0, mu, center, dv, dw) * diagonal
}

/// Distance from `p` to the polyline by sampling each segment every `step`
/// meters.
pub fn dense_polyline_distance(p: (f64, f64), vertices: &[(f64, f64)], step: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut visit = |q: (f64, f64)| best = best.min((p.0 - q.0).hypot(p.1 - q.1));
    if let [only] = vertices {
        visit(*only);
    }
    for s in vertices.windows(2) {
        let (a, b) = (s[0], s[1]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = (len / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            visit((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    best
}
