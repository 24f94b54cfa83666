//! Query interfaces shared by the direct dynamics model and the sampled
//! field grids, so gait evaluation can run against either.

use crate::body::Shape;
use crate::rft::{LocalConnection, MetricTensor};
use crate::Result;
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the three position components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Theta,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Theta];

    pub fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Theta => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Theta => "theta",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x" => Ok(Component::X),
            "y" => Ok(Component::Y),
            "theta" => Ok(Component::Theta),
            other => Err(format!("unknown component '{other}' (expected x, y or theta)")),
        }
    }
}

/// `[∂M/∂β₁, ∂M/∂β₂]`.
pub type MetricGradient = [Matrix2<f64>; 2];

pub trait ConnectionSource {
    fn connection_at(&self, beta: &Shape) -> Result<LocalConnection>;
}

pub trait MetricSource {
    fn metric_at(&self, beta: &Shape) -> Result<MetricTensor>;
    fn metric_gradient_at(&self, beta: &Shape) -> Result<MetricGradient>;
}

/// Scalar constraint-curvature (height) function per position component.
pub trait HeightSource {
    fn height_at(&self, beta: &Shape, component: Component) -> Result<f64>;

    /// Signed flux of every component through the closed polygon, for
    /// sources that can integrate it exactly. `None` falls back to
    /// quadrature over [`HeightSource::height_at`].
    fn polygon_flux(&self, _points: &[Shape]) -> Option<Result<[f64; 3]>> {
        None
    }
}

impl<T: ConnectionSource + ?Sized> ConnectionSource for &T {
    fn connection_at(&self, beta: &Shape) -> Result<LocalConnection> {
        (**self).connection_at(beta)
    }
}

impl<T: MetricSource + ?Sized> MetricSource for &T {
    fn metric_at(&self, beta: &Shape) -> Result<MetricTensor> {
        (**self).metric_at(beta)
    }
    fn metric_gradient_at(&self, beta: &Shape) -> Result<MetricGradient> {
        (**self).metric_gradient_at(beta)
    }
}

impl<T: HeightSource + ?Sized> HeightSource for &T {
    fn height_at(&self, beta: &Shape, component: Component) -> Result<f64> {
        (**self).height_at(beta, component)
    }
    fn polygon_flux(&self, points: &[Shape]) -> Option<Result<[f64; 3]>> {
        (**self).polygon_flux(points)
    }
}

/// A metric that is the same everywhere; handy for checking the Euclidean
/// limits of the gait functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMetric(pub Matrix2<f64>);

impl UniformMetric {
    pub fn scaled_identity(c: f64) -> Self {
        Self(Matrix2::identity() * c)
    }
}

impl MetricSource for UniformMetric {
    fn metric_at(&self, _beta: &Shape) -> Result<MetricTensor> {
        Ok(MetricTensor(self.0))
    }
    fn metric_gradient_at(&self, _beta: &Shape) -> Result<MetricGradient> {
        Ok([Matrix2::zeros(); 2])
    }
}
