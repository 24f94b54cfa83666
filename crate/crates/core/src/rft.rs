//! Resistive-force dynamics.
//!
//! Each segment feels a drag force proportional to its velocity, with
//! separate coefficients along and across the segment. The net body-frame
//! wrench is linear in `[ξ; β̇]`:
//!
//! ```text
//! F = -(ω_g ξ + ω_β β̇)
//! ```
//!
//! Quasi-static balance `F = 0` gives `ξ = -A β̇` with `A = ω_g⁻¹ ω_β`. The
//! power dissipated by a shape change is the quadratic form `β̇ᵀ M β̇`, which
//! is the Riemannian metric on shape space.

use crate::body::{BodyDiscretization, BodyModel, Segment, Shape, ShapeBounds};
use crate::se2::BodyVelocity;
use crate::source::{ConnectionSource, MetricGradient, MetricSource};
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3, Matrix3x2, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Largest accepted condition number of `ω_g`.
const MAX_CONDITION: f64 = 1e12;

/// Step used for finite-difference metric gradients of the direct model.
const METRIC_GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragModel {
    pub c_tangential: f64,
    pub c_normal: f64,
}

impl Default for DragModel {
    fn default() -> Self {
        Self {
            c_tangential: 1.0,
            c_normal: 2.0,
        }
    }
}

impl DragModel {
    pub fn validate(&self) -> Result<()> {
        if self.c_tangential > 0.0 && self.c_normal > self.c_tangential && self.c_normal.is_finite()
        {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "drag coefficients must satisfy c_normal > c_tangential > 0 (got {} and {})",
                self.c_normal, self.c_tangential
            )))
        }
    }

    /// Per-unit-length drag matrix acting on (longitudinal, lateral, angular)
    /// segment velocity. Segment rotation is not resisted directly.
    fn local_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(self.c_tangential, self.c_normal, 0.0))
    }
}

/// Pfaffian constraint split into its body-velocity and shape-velocity blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintMatrix {
    pub omega_g: Matrix3<f64>,
    pub omega_b: Matrix3x2<f64>,
}

/// Local connection `A(β)`; rows are (x, y, θ), columns the two shape rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConnection(pub Matrix3x2<f64>);

/// Riemannian metric `M(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor(pub Matrix2<f64>);

impl LocalConnection {
    pub fn matrix(&self) -> &Matrix3x2<f64> {
        &self.0
    }

    /// Body velocity `ξ = -A β̇`.
    pub fn body_velocity(&self, beta_dot: &Vector2<f64>) -> BodyVelocity {
        let v = -(self.0 * beta_dot);
        BodyVelocity::new(v[0], v[1], v[2])
    }

    pub fn row(&self, i: usize) -> Vector2<f64> {
        Vector2::new(self.0[(i, 0)], self.0[(i, 1)])
    }
}

impl MetricTensor {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn quadratic(&self, v: &Vector2<f64>) -> f64 {
        (v.transpose() * self.0 * v)[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        let m = &self.0;
        m[(0, 0)] > 0.0 && m.determinant() > 0.0
    }
}

/// Map from body velocity to segment velocity in the segment frame.
///
/// A point at `(px, py)` moving with the body frame has velocity
/// `(ξx − ξθ·py, ξy + ξθ·px)`; the segment frame is rotated by `θs`.
fn rigid_jacobian(segment: &Segment) -> Matrix3<f64> {
    let (s, c) = segment.pose.theta.sin_cos();
    let (px, py) = (segment.pose.x, segment.pose.y);
    Matrix3::new(
        c,
        s,
        -c * py + s * px,
        -s,
        c,
        s * py + c * px,
        0.0,
        0.0,
        1.0,
    )
}

impl ConstraintMatrix {
    /// Net body-frame wrench `(Fx, Fy, Fθ)` for the given velocities.
    pub fn wrench(&self, xi: &BodyVelocity, beta_dot: &Vector2<f64>) -> Vector3<f64> {
        let xi = Vector3::new(xi.xi_x, xi.xi_y, xi.xi_theta);
        -(self.omega_g * xi + self.omega_b * beta_dot)
    }

    pub fn condition_number(&self) -> f64 {
        let eig = SymmetricEigen::new(self.omega_g).eigenvalues;
        let max = eig.max();
        let min = eig.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// `A = ω_g⁻¹ ω_β`; `beta` only labels the error.
    pub fn local_connection(&self, beta: &Shape) -> Result<LocalConnection> {
        let condition = self.condition_number();
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::SingularConstraint {
                b1: beta[0],
                b2: beta[1],
                condition,
            });
        }
        if condition > 1e6 {
            log::debug!(
                "omega_g poorly conditioned at ({}, {}): {condition:e}",
                beta[0],
                beta[1]
            );
        }
        let lu = self.omega_g.lu();
        let a = lu.solve(&self.omega_b).ok_or(Error::SingularConstraint {
            b1: beta[0],
            b2: beta[1],
            condition,
        })?;
        Ok(LocalConnection(a))
    }
}

/// Assemble the Pfaffian constraint by summing segment drag.
pub fn constraint_matrix(body: &BodyDiscretization, drag: &DragModel) -> ConstraintMatrix {
    let c = drag.local_matrix();
    let mut omega_g = Matrix3::zeros();
    let mut omega_b = Matrix3x2::zeros();
    for seg in &body.segments {
        let jg = rigid_jacobian(seg);
        let weighted = jg.transpose() * c * seg.length;
        omega_g += weighted * jg;
        omega_b += weighted * seg.shape_jacobian;
    }
    ConstraintMatrix { omega_g, omega_b }
}

/// Total Jacobian from `β̇` to segment velocity once the body is allowed to
/// move according to the connection.
pub fn segment_velocity_jacobian(segment: &Segment, connection: &LocalConnection) -> Matrix3x2<f64> {
    segment.shape_jacobian - rigid_jacobian(segment) * connection.0
}

/// `M = Σ Jᵀ C J Δℓ` over segments.
pub fn metric_from_body(
    body: &BodyDiscretization,
    drag: &DragModel,
    connection: &LocalConnection,
) -> MetricTensor {
    let c = drag.local_matrix();
    let mut m = Matrix2::zeros();
    for seg in &body.segments {
        let j = segment_velocity_jacobian(seg, connection);
        m += j.transpose() * c * j * seg.length;
    }
    // Symmetrize away round-off.
    MetricTensor(0.5 * (m + m.transpose()))
}

/// Direct evaluation of the swimmer dynamics at arbitrary shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swimmer {
    pub model: BodyModel,
    pub n_segments: usize,
    pub drag: DragModel,
    pub bounds: ShapeBounds,
}

impl Swimmer {
    pub fn new(model: BodyModel) -> Self {
        Self {
            model,
            n_segments: model.default_segments(),
            drag: DragModel::default(),
            bounds: model.default_bounds(),
        }
    }

    pub fn three_link() -> Self {
        Self::new(BodyModel::ThreeLink)
    }

    pub fn serpenoid() -> Self {
        Self::new(BodyModel::serpenoid())
    }

    pub fn with_segments(mut self, n_segments: usize) -> Self {
        self.n_segments = n_segments;
        self
    }

    pub fn with_bounds(mut self, bounds: ShapeBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_drag(mut self, drag: DragModel) -> Self {
        self.drag = drag;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate_segments(self.n_segments)?;
        self.drag.validate()
    }

    pub fn body(&self, beta: &Shape) -> Result<BodyDiscretization> {
        self.bounds.check(beta)?;
        self.model.body(beta, self.n_segments)
    }

    pub fn constraint_matrix(&self, beta: &Shape) -> Result<ConstraintMatrix> {
        Ok(constraint_matrix(&self.body(beta)?, &self.drag))
    }

    pub fn local_connection(&self, beta: &Shape) -> Result<LocalConnection> {
        self.constraint_matrix(beta)?.local_connection(beta)
    }

    pub fn metric(&self, beta: &Shape) -> Result<MetricTensor> {
        Ok(self.dynamics(beta)?.1)
    }

    /// Connection and metric from a single body evaluation.
    pub fn dynamics(&self, beta: &Shape) -> Result<(LocalConnection, MetricTensor)> {
        let body = self.body(beta)?;
        self.dynamics_of_body(beta, &body)
    }

    fn dynamics_of_body(
        &self,
        beta: &Shape,
        body: &BodyDiscretization,
    ) -> Result<(LocalConnection, MetricTensor)> {
        let a = constraint_matrix(body, &self.drag).local_connection(beta)?;
        let m = metric_from_body(body, &self.drag, &a);
        if !m.is_positive_definite() {
            return Err(Error::MetricNotPositiveDefinite {
                b1: beta[0],
                b2: beta[1],
            });
        }
        Ok((a, m))
    }

    /// Power dissipated into the fluid, `β̇ᵀ M(β) β̇`.
    pub fn dissipated_power(&self, beta: &Shape, beta_dot: &Vector2<f64>) -> Result<f64> {
        Ok(self.metric(beta)?.quadratic(beta_dot))
    }

    /// Metric without the bounds check, for finite differences straddling
    /// the boundary.
    fn metric_unchecked(&self, beta: &Shape) -> Result<MetricTensor> {
        let body = self.model.body(beta, self.n_segments)?;
        Ok(self.dynamics_of_body(beta, &body)?.1)
    }
}

impl ConnectionSource for Swimmer {
    fn connection_at(&self, beta: &Shape) -> Result<LocalConnection> {
        self.local_connection(beta)
    }
}

impl MetricSource for Swimmer {
    fn metric_at(&self, beta: &Shape) -> Result<MetricTensor> {
        self.metric(beta)
    }

    fn metric_gradient_at(&self, beta: &Shape) -> Result<MetricGradient> {
        self.bounds.check(beta)?;
        let h = METRIC_GRADIENT_STEP;
        let mut out = [Matrix2::zeros(); 2];
        for (axis, slot) in out.iter_mut().enumerate() {
            let mut e = Vector2::zeros();
            e[axis] = h;
            let plus = self.metric_unchecked(&(beta + e))?.0;
            let minus = self.metric_unchecked(&(beta - e))?.0;
            *slot = (plus - minus) / (2.0 * h);
        }
        Ok(out)
    }
}
