//! Planar rigid-body group arithmetic.
//!
//! Group elements are plain `(x, y, theta)` triples. The heading is kept
//! unwrapped so that accumulated rotation over several gait cycles stays
//! meaningful; wrap it with [`wrap_angle`] only when displaying.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Pose of a body frame in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Velocity expressed in the moving body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub xi_x: f64,
    pub xi_y: f64,
    pub xi_theta: f64,
}

/// Time derivative of a [`GroupElement`] in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldVelocity {
    pub x_dot: f64,
    pub y_dot: f64,
    pub theta_dot: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        compose(self, other)
    }

    pub fn inverse(&self) -> GroupElement {
        inverse(self)
    }

    /// Component by index: 0 = x, 1 = y, 2 = theta.
    pub fn component(&self, index: usize) -> f64 {
        match index {
            0 => self.x,
            1 => self.y,
            2 => self.theta,
            _ => panic!("group element component index {index} out of range"),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

impl BodyVelocity {
    pub fn new(xi_x: f64, xi_y: f64, xi_theta: f64) -> Self {
        Self {
            xi_x,
            xi_y,
            xi_theta,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xi_x.is_finite() && self.xi_y.is_finite() && self.xi_theta.is_finite()
    }
}

/// SE(2) product `g1 ∘ g2`: the pose `g2` read in the frame `g1`.
pub fn compose(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    let (s, c) = g1.theta.sin_cos();
    GroupElement {
        x: g1.x + c * g2.x - s * g2.y,
        y: g1.y + s * g2.x + c * g2.y,
        theta: g1.theta + g2.theta,
    }
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    let (s, c) = g.theta.sin_cos();
    GroupElement {
        x: -(c * g.x + s * g.y),
        y: -(-s * g.x + c * g.y),
        theta: -g.theta,
    }
}

/// Left action of `g` on a body velocity, giving `ġ` in world coordinates.
pub fn world_velocity(g: &GroupElement, xi: &BodyVelocity) -> WorldVelocity {
    let (s, c) = g.theta.sin_cos();
    WorldVelocity {
        x_dot: c * xi.xi_x - s * xi.xi_y,
        y_dot: s * xi.xi_x + c * xi.xi_y,
        theta_dot: xi.xi_theta,
    }
}

/// Reduce an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_close(a: &GroupElement, b: &GroupElement, tol: f64) {
        assert_abs_diff_eq!(a.x, b.x, epsilon = tol);
        assert_abs_diff_eq!(a.y, b.y, epsilon = tol);
        assert_abs_diff_eq!(a.theta, b.theta, epsilon = tol);
    }

    #[test]
    fn identity_on_the_left() {
        let g = GroupElement::new(1.0, 2.0, 0.5);
        assert_close(&compose(&GroupElement::IDENTITY, &g), &g, 0.0);
    }

    #[test]
    fn quarter_turn_then_step() {
        let g = compose(
            &GroupElement::new(1.0, 0.0, PI / 2.0),
            &GroupElement::new(1.0, 0.0, 0.0),
        );
        assert_close(&g, &GroupElement::new(1.0, 1.0, PI / 2.0), 1e-15);
    }

    #[test]
    fn inverse_cases() {
        let g = GroupElement::new(0.3, -0.7, 1.1);
        assert_close(&compose(&g, &inverse(&g)), &GroupElement::IDENTITY, 1e-15);
        assert_close(&inverse(&GroupElement::IDENTITY), &GroupElement::IDENTITY, 0.0);
        assert_close(
            &inverse(&GroupElement::new(1.0, 0.0, 0.0)),
            &GroupElement::new(-1.0, 0.0, 0.0),
            0.0,
        );
        assert_close(
            &inverse(&GroupElement::new(0.0, 0.0, 0.4)),
            &GroupElement::new(0.0, 0.0, -0.4),
            0.0,
        );
    }

    #[test]
    fn world_velocity_cases() {
        let v = world_velocity(&GroupElement::IDENTITY, &BodyVelocity::new(1.0, 0.0, 0.0));
        assert_eq!((v.x_dot, v.y_dot, v.theta_dot), (1.0, 0.0, 0.0));

        let v = world_velocity(
            &GroupElement::new(0.0, 0.0, PI / 2.0),
            &BodyVelocity::new(1.0, 0.0, 0.0),
        );
        assert_abs_diff_eq!(v.x_dot, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y_dot, 1.0, epsilon = 1e-15);

        let v = world_velocity(
            &GroupElement::new(5.0, -2.0, PI),
            &BodyVelocity::new(0.0, 0.0, 0.3),
        );
        assert_abs_diff_eq!(v.x_dot, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y_dot, 0.0, epsilon = 1e-15);
        assert_eq!(v.theta_dot, 0.3);
    }

    #[test]
    fn angles_are_not_wrapped() {
        let g = GroupElement::new(0.0, 0.0, 3.0);
        let h = compose(&g, &g);
        assert_eq!(h.theta, 6.0);
        assert_abs_diff_eq!(wrap_angle(h.theta), 6.0 - 2.0 * PI, epsilon = 1e-15);
    }

    fn element() -> impl Strategy<Value = GroupElement> {
        (-5.0..5.0f64, -5.0..5.0f64, -7.0..7.0f64).prop_map(|(x, y, t)| GroupElement::new(x, y, t))
    }

    proptest! {
        #[test]
        fn compose_is_associative(a in element(), b in element(), c in element()) {
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            prop_assert!((left.x - right.x).abs() < 1e-12);
            prop_assert!((left.y - right.y).abs() < 1e-12);
            prop_assert!((left.theta - right.theta).abs() < 1e-12);
        }

        #[test]
        fn inverse_is_an_involution(g in element()) {
            let back = inverse(&inverse(&g));
            prop_assert!((back.x - g.x).abs() < 1e-12);
            prop_assert!((back.y - g.y).abs() < 1e-12);
            prop_assert!((back.theta - g.theta).abs() < 1e-12);
        }

        #[test]
        fn world_velocity_preserves_speed(g in element(), vx in -3.0..3.0f64, vy in -3.0..3.0f64) {
            let v = world_velocity(&g, &BodyVelocity::new(vx, vy, 0.0));
            let lhs = v.x_dot.hypot(v.y_dot);
            prop_assert!((lhs - vx.hypot(vy)).abs() < 1e-12);
        }
    }
}
