//! Differential-drive (unicycle) kinematics and its explicit Euler discretization.
//!
//! The state is the planar pose `(x, y, θ)` and the input is the pair `(v, ω)`:
//!
//! ```text
//! ẋ = v cos θ,   ẏ = v sin θ,   θ̇ = ω
//! ```
//!
//! Heading is never wrapped by the dynamics. Angular comparisons (costs, error
//! metrics, termination checks) go through [`wrap_angle`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Planar vehicle pose. `theta` is stored unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    /// meters
    pub x: f64,
    /// meters
    pub y: f64,
    /// radians
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Euclidean distance between the positions of two poses.
    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Absolute wrapped heading difference, in `[0, π]`.
    pub fn heading_error_to(&self, other: &Pose) -> f64 {
        wrap_angle(self.theta - other.theta).abs()
    }
}

/// Linear and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    /// meters/second
    pub v: f64,
    /// radians/second
    pub omega: f64,
}

impl Control {
    pub const ZERO: Control = Control { v: 0.0, omega: 0.0 };

    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }
}

/// Box constraint on controls. Zero must lie inside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self {
            v_min: -0.6,
            v_max: 0.6,
            omega_min: -FRAC_PI_2,
            omega_max: FRAC_PI_2,
        }
    }
}

impl ControlBounds {
    /// Symmetric box `[-v_max, v_max] × [-omega_max, omega_max]`.
    pub fn symmetric(v_max: f64, omega_max: f64) -> Self {
        Self {
            v_min: -v_max,
            v_max,
            omega_min: -omega_max,
            omega_max,
        }
    }

    /// Returns a description of the first violated invariant, if any.
    pub fn validate(&self) -> Result<(), String> {
        let vals = [self.v_min, self.v_max, self.omega_min, self.omega_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("control bounds must be finite".into());
        }
        if self.v_min > self.v_max {
            return Err(format!(
                "v_min ({}) must not exceed v_max ({})",
                self.v_min, self.v_max
            ));
        }
        if self.omega_min > self.omega_max {
            return Err(format!(
                "omega_min ({}) must not exceed omega_max ({})",
                self.omega_min, self.omega_max
            ));
        }
        if !(self.v_min <= 0.0 && 0.0 <= self.v_max) {
            return Err("zero linear velocity must lie inside [v_min, v_max]".into());
        }
        if !(self.omega_min <= 0.0 && 0.0 <= self.omega_max) {
            return Err("zero angular velocity must lie inside [omega_min, omega_max]".into());
        }
        Ok(())
    }

    pub fn contains(&self, u: &Control) -> bool {
        (self.v_min..=self.v_max).contains(&u.v)
            && (self.omega_min..=self.omega_max).contains(&u.omega)
    }
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Sampling time, seconds. Must be positive.
    pub dt: f64,
}

impl ModelParams {
    pub fn new(dt: f64) -> Self {
        Self { dt }
    }
}

/// One explicit Euler step of the unicycle kinematics.
#[inline]
pub fn euler_step(state: Pose, u: Control, params: ModelParams) -> Pose {
    let dt = params.dt;
    let (sin, cos) = state.theta.sin_cos();
    Pose {
        x: state.x + dt * u.v * cos,
        y: state.y + dt * u.v * sin,
        theta: state.theta + dt * u.omega,
    }
}

/// Maps an angle to the representative in `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // r is in [0, 2π]; rounding in rem_euclid can yield exactly 2π
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Componentwise projection onto the control box.
pub fn clamp_control(u: Control, bounds: &ControlBounds) -> Control {
    Control {
        v: u.v.clamp(bounds.v_min, bounds.v_max),
        omega: u.omega.clamp(bounds.omega_min, bounds.omega_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn straight_step_along_x() {
        let p = euler_step(
            Pose::new(0.0, 0.0, 0.0),
            Control::new(1.0, 0.0),
            ModelParams::new(0.5),
        );
        assert_eq!(p, Pose::new(0.5, 0.0, 0.0));
    }

    #[test]
    fn pure_rotation_keeps_position() {
        let p = euler_step(
            Pose::new(0.0, 0.0, 0.0),
            Control::new(0.0, 1.0),
            ModelParams::new(0.5),
        );
        assert_eq!(p, Pose::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn step_along_y_when_facing_up() {
        let p = euler_step(
            Pose::new(0.0, 0.0, FRAC_PI_2),
            Control::new(1.0, 0.0),
            ModelParams::new(0.1),
        );
        assert!(close(p.x, 0.0) && close(p.y, 0.1) && p.theta == FRAC_PI_2);
    }

    #[test]
    fn heading_is_not_wrapped_by_dynamics() {
        let p = euler_step(
            Pose::new(0.0, 0.0, 3.0),
            Control::new(0.0, 1.0),
            ModelParams::new(1.0),
        );
        assert_eq!(p.theta, 4.0);
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!(close(wrap_angle(TAU), 0.0));
        assert!(close(wrap_angle(-1.5 * PI), FRAC_PI_2));
        assert!(close(wrap_angle(PI), PI));
        assert!(close(wrap_angle(-PI), PI));
    }

    #[test]
    fn clamp_examples() {
        let b = ControlBounds::default();
        assert_eq!(clamp_control(Control::ZERO, &b), Control::ZERO);
        assert_eq!(
            clamp_control(Control::new(10.0, 0.0), &b),
            Control::new(0.6, 0.0)
        );
        let inside = Control::new(0.2, -0.3);
        assert_eq!(clamp_control(inside, &b), inside);
    }

    #[test]
    fn bounds_validation() {
        assert!(ControlBounds::default().validate().is_ok());
        let b = ControlBounds {
            v_min: 0.1,
            ..ControlBounds::default()
        };
        assert!(b.validate().is_err());
        let b = ControlBounds {
            omega_max: -2.0,
            ..ControlBounds::default()
        };
        assert!(b.validate().is_err());
    }
}
