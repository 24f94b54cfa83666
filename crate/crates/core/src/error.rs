use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid body discretization: {0}")]
    InvalidBody(String),

    #[error("shape component beta{} = {value} outside [{min}, {max}]", .axis + 1)]
    OutOfBounds {
        axis: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("constraint matrix singular at shape ({b1}, {b2}) (condition number {condition:e})")]
    SingularConstraint { b1: f64, b2: f64, condition: f64 },

    #[error("metric not positive definite at shape ({b1}, {b2})")]
    MetricNotPositiveDefinite { b1: f64, b2: f64 },

    #[error("field sampling failed at node ({i}, {j}): {source}")]
    NodeFailure {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid gait: {0}")]
    InvalidGait(String),

    #[error("gait polygon self-intersects (segments {first} and {second})")]
    SelfIntersection { first: usize, second: usize },

    #[error("gait has zero pathlength")]
    ZeroPathlength,

    #[error("invalid optimizer configuration: {0}")]
    InvalidOptimizer(String),

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised by the dynamics or by a shape leaving the modeled domain.
    pub fn is_domain_error(&self) -> bool {
        match self {
            Error::OutOfBounds { .. }
            | Error::SingularConstraint { .. }
            | Error::MetricNotPositiveDefinite { .. }
            | Error::InvalidBody(_)
            | Error::SelfIntersection { .. }
            | Error::ZeroPathlength
            | Error::InvalidGait(_) => true,
            Error::NodeFailure { source, .. } => source.is_domain_error(),
            _ => false,
        }
    }
}
