//! Discretized swimmer bodies.
//!
//! A body is a chain of short straight segments with total length one. Every
//! segment carries its midpoint pose in the body frame and the Jacobian from
//! shape velocity to the segment's own (longitudinal, lateral, angular)
//! velocity. The body frame sits at the length-weighted centroid of the
//! segment midpoints and is aligned with the length-weighted mean segment
//! orientation.

use crate::se2::GroupElement;
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3x2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point in the two-dimensional shape space: joint angles for the
/// three-link swimmer, curvature-mode amplitudes for the serpenoid.
pub type Shape = Vector2<f64>;

/// Default amplitude scale of the serpenoid curvature modes.
pub const SERPENOID_MODE_SCALE: f64 = 2.0 * PI;

pub const DEFAULT_THREE_LINK_SEGMENTS: usize = 99;
pub const DEFAULT_SERPENOID_SEGMENTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Midpoint pose in the body frame.
    pub pose: GroupElement,
    pub length: f64,
    /// Maps `β̇` to the segment velocity expressed in the segment's own frame
    /// with the body frame held fixed. Rows: longitudinal, lateral, angular.
    pub shape_jacobian: Matrix3x2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyDiscretization {
    pub segments: Vec<Segment>,
}

/// The two example body geometries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyModel {
    ThreeLink,
    Serpenoid { mode_scale: f64 },
}

impl BodyModel {
    pub fn serpenoid() -> Self {
        BodyModel::Serpenoid {
            mode_scale: SERPENOID_MODE_SCALE,
        }
    }

    pub fn default_segments(&self) -> usize {
        match self {
            BodyModel::ThreeLink => DEFAULT_THREE_LINK_SEGMENTS,
            BodyModel::Serpenoid { .. } => DEFAULT_SERPENOID_SEGMENTS,
        }
    }

    pub fn validate_segments(&self, n_segments: usize) -> Result<()> {
        match self {
            BodyModel::ThreeLink if n_segments < 3 || n_segments % 3 != 0 => {
                Err(Error::InvalidBody(format!(
                    "three-link body needs a positive multiple of 3 segments, got {n_segments}"
                )))
            }
            BodyModel::Serpenoid { .. } if n_segments < 16 => Err(Error::InvalidBody(format!(
                "serpenoid body needs at least 16 segments, got {n_segments}"
            ))),
            BodyModel::Serpenoid { mode_scale } if !(mode_scale.is_finite() && *mode_scale > 0.0) => {
                Err(Error::InvalidBody(format!(
                    "serpenoid mode scale must be positive, got {mode_scale}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn body(&self, beta: &Shape, n_segments: usize) -> Result<BodyDiscretization> {
        match *self {
            BodyModel::ThreeLink => three_link_body(beta, n_segments),
            BodyModel::Serpenoid { mode_scale } => {
                serpenoid_body_with_scale(beta, n_segments, mode_scale)
            }
        }
    }

    /// Shape box wide enough to show the height-function structure.
    pub fn default_bounds(&self) -> ShapeBounds {
        match self {
            BodyModel::ThreeLink => ShapeBounds::symmetric(3.0),
            BodyModel::Serpenoid { .. } => ShapeBounds::symmetric(6.0),
        }
    }

    pub fn shape_names(&self) -> [&'static str; 2] {
        match self {
            BodyModel::ThreeLink => ["alpha1", "alpha2"],
            BodyModel::Serpenoid { .. } => ["amplitude1", "amplitude2"],
        }
    }
}

/// Axis-aligned box of admissible shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeBounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl ShapeBounds {
    pub fn symmetric(half_width: f64) -> Self {
        Self {
            min: [-half_width; 2],
            max: [half_width; 2],
        }
    }

    pub fn check(&self, beta: &Shape) -> Result<()> {
        for axis in 0..2 {
            let value = beta[axis];
            // NaN fails this comparison too.
            if !(value >= self.min[axis] && value <= self.max[axis]) {
                return Err(Error::OutOfBounds {
                    axis,
                    value,
                    min: self.min[axis],
                    max: self.max[axis],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, beta: &Shape) -> bool {
        self.check(beta).is_ok()
    }

    pub fn clamp(&self, beta: &Shape) -> Shape {
        Shape::new(
            beta[0].clamp(self.min[0], self.max[0]),
            beta[1].clamp(self.min[1], self.max[1]),
        )
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn center(&self) -> Shape {
        Shape::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        )
    }
}

impl Default for ShapeBounds {
    fn default() -> Self {
        Self::symmetric(3.0)
    }
}

/// Segment data in an arbitrary reference frame, before centroid and
/// mean-orientation normalization.
#[derive(Debug, Clone)]
struct RawSegment {
    position: Vector2<f64>,
    theta: f64,
    /// Columns: ∂position/∂β₁, ∂position/∂β₂.
    d_position: Matrix2<f64>,
    d_theta: RowVector2<f64>,
    length: f64,
}

fn perp() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn normalize(raw: &[RawSegment]) -> BodyDiscretization {
    let total: f64 = raw.iter().map(|r| r.length).sum();
    let mut mean_theta = 0.0;
    let mut centroid = Vector2::zeros();
    let mut d_mean_theta = RowVector2::zeros();
    let mut d_centroid = Matrix2::zeros();
    for r in raw {
        let w = r.length / total;
        mean_theta += w * r.theta;
        centroid += w * r.position;
        d_mean_theta += w * r.d_theta;
        d_centroid += w * r.d_position;
    }

    let back = rotation(-mean_theta);
    let segments = raw
        .iter()
        .map(|r| {
            let theta = r.theta - mean_theta;
            let position = back * (r.position - centroid);
            let d_theta = r.d_theta - d_mean_theta;
            let d_position = back * (r.d_position - d_centroid) - perp() * position * d_mean_theta;
            let local = rotation(-theta) * d_position;
            let shape_jacobian = Matrix3x2::new(
                local[(0, 0)],
                local[(0, 1)],
                local[(1, 0)],
                local[(1, 1)],
                d_theta[0],
                d_theta[1],
            );
            Segment {
                pose: GroupElement::new(position.x, position.y, theta),
                length: r.length,
                shape_jacobian,
            }
        })
        .collect();
    BodyDiscretization { segments }
}

/// Purcell's three-link swimmer with links of length 1/3.
///
/// `alpha[0]` is the orientation of the tail link and `alpha[1]` that of the
/// head link, both measured relative to the middle link. Equal angles give
/// the point-symmetric zig-zag; opposite angles give a C-shape.
pub fn three_link_body(alpha: &Shape, n_segments: usize) -> Result<BodyDiscretization> {
    BodyModel::ThreeLink.validate_segments(n_segments)?;
    let per_link = n_segments / 3;
    let link = 1.0 / 3.0;
    let dl = link / per_link as f64;
    let mut raw = Vec::with_capacity(n_segments);

    // Tail link, from the free end toward the first joint.
    let (s1, c1) = alpha[0].sin_cos();
    for k in 0..per_link {
        let t = link - (k as f64 + 0.5) * dl;
        raw.push(RawSegment {
            position: Vector2::new(-link / 2.0 - t * c1, -t * s1),
            theta: alpha[0],
            d_position: Matrix2::new(t * s1, 0.0, -t * c1, 0.0),
            d_theta: RowVector2::new(1.0, 0.0),
            length: dl,
        });
    }
    for k in 0..per_link {
        let u = -link / 2.0 + (k as f64 + 0.5) * dl;
        raw.push(RawSegment {
            position: Vector2::new(u, 0.0),
            theta: 0.0,
            d_position: Matrix2::zeros(),
            d_theta: RowVector2::zeros(),
            length: dl,
        });
    }
    let (s2, c2) = alpha[1].sin_cos();
    for k in 0..per_link {
        let t = (k as f64 + 0.5) * dl;
        raw.push(RawSegment {
            position: Vector2::new(link / 2.0 + t * c2, t * s2),
            theta: alpha[1],
            d_position: Matrix2::new(0.0, -t * s2, 0.0, t * c2),
            d_theta: RowVector2::new(0.0, 1.0),
            length: dl,
        });
    }
    Ok(normalize(&raw))
}

/// Serpenoid swimmer with the default mode scale of 2π.
pub fn serpenoid_body(amps: &Shape, n_segments: usize) -> Result<BodyDiscretization> {
    serpenoid_body_with_scale(amps, n_segments, SERPENOID_MODE_SCALE)
}

/// Serpenoid swimmer whose curvature along arclength `s ∈ [-1/2, 1/2]` is
/// `scale · (amps[0]·sin 2πs + amps[1]·cos 2πs)`.
///
/// Heading and position are integrated with the trapezoidal rule on
/// `2·n_segments + 1` nodes; each segment takes the pose of the node at its
/// arc midpoint.
pub fn serpenoid_body_with_scale(
    amps: &Shape,
    n_segments: usize,
    mode_scale: f64,
) -> Result<BodyDiscretization> {
    BodyModel::Serpenoid { mode_scale }.validate_segments(n_segments)?;
    // Integrate on half-segment steps so that every segment's arc midpoint
    // is a node; that halves the step and removes the chord-averaging error.
    let n = 2 * n_segments;
    let ds = 1.0 / n as f64;
    let mode = |s: f64| {
        let (sn, cs) = (2.0 * PI * s).sin_cos();
        RowVector2::new(mode_scale * sn, mode_scale * cs)
    };

    let mut theta = vec![0.0; n + 1];
    let mut d_theta = vec![RowVector2::zeros(); n + 1];
    let mut position = vec![Vector2::zeros(); n + 1];
    let mut d_position = vec![Matrix2::zeros(); n + 1];
    let mut prev_mode = mode(-0.5);
    for k in 1..=n {
        let m = mode(-0.5 + k as f64 * ds);
        let dm = 0.5 * ds * (prev_mode + m);
        d_theta[k] = d_theta[k - 1] + dm;
        theta[k] = theta[k - 1] + (dm * amps)[0];
        prev_mode = m;
    }
    let tangent = |k: usize| {
        let (s, c) = theta[k].sin_cos();
        (Vector2::new(c, s), Vector2::new(-s, c))
    };
    for k in 1..=n {
        let (t0, n0) = tangent(k - 1);
        let (t1, n1) = tangent(k);
        position[k] = position[k - 1] + 0.5 * ds * (t0 + t1);
        d_position[k] = d_position[k - 1] + 0.5 * ds * (n0 * d_theta[k - 1] + n1 * d_theta[k]);
    }

    let raw: Vec<RawSegment> = (0..n_segments)
        .map(|j| {
            let k = 2 * j + 1;
            RawSegment {
                position: position[k],
                theta: theta[k],
                d_position: d_position[k],
                d_theta: d_theta[k],
                length: 2.0 * ds,
            }
        })
        .collect();
    Ok(normalize(&raw))
}

/// Per-segment Jacobians from shape velocity to local segment velocity.
pub fn shape_jacobians(body: &BodyDiscretization) -> Vec<Matrix3x2<f64>> {
    body.segments.iter().map(|s| s.shape_jacobian).collect()
}

impl BodyDiscretization {
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Length-weighted centroid of segment midpoints and mean orientation.
    pub fn frame_offset(&self) -> GroupElement {
        let total = self.total_length();
        let mut g = GroupElement::IDENTITY;
        for s in &self.segments {
            let w = s.length / total;
            g.x += w * s.pose.x;
            g.y += w * s.pose.y;
            g.theta += w * s.pose.theta;
        }
        g
    }

    /// Re-express the body in its own centroid / mean-orientation frame.
    pub fn normalized(&self) -> BodyDiscretization {
        let raw: Vec<RawSegment> = self
            .segments
            .iter()
            .map(|s| {
                let local = Matrix2::new(
                    s.shape_jacobian[(0, 0)],
                    s.shape_jacobian[(0, 1)],
                    s.shape_jacobian[(1, 0)],
                    s.shape_jacobian[(1, 1)],
                );
                RawSegment {
                    position: Vector2::new(s.pose.x, s.pose.y),
                    theta: s.pose.theta,
                    d_position: rotation(s.pose.theta) * local,
                    d_theta: RowVector2::new(s.shape_jacobian[(2, 0)], s.shape_jacobian[(2, 1)]),
                    length: s.length,
                }
            })
            .collect();
        normalize(&raw)
    }

    /// The two free ends, extrapolated from the first and last segments.
    pub fn end_points(&self) -> [Vector2<f64>; 2] {
        let end = |s: &Segment, sign: f64| {
            let (sn, cs) = s.pose.theta.sin_cos();
            Vector2::new(s.pose.x, s.pose.y) + sign * 0.5 * s.length * Vector2::new(cs, sn)
        };
        [
            end(&self.segments[0], -1.0),
            end(self.segments.last().expect("body has segments"), 1.0),
        ]
    }
}
