//! Geometric gait optimization for drag-dominated swimmers.
//!
//! The crate builds the local connection and power metric of a swimmer
//! from resistive-force drag, samples them into height functions over a
//! two-dimensional shape space, and evolves gaits toward maximum
//! displacement or efficiency with a soap-bubble flow.
//!
//! - [`se2`]: planar rigid motions.
//! - [`body`]: three-link and serpenoid body models.
//! - [`rft`]: drag, local connection and metric.
//! - [`fields`] and [`contour`]: sampled grids, height functions, zero sets.
//! - [`gait`]: displacement, pathlength and flux of closed loops.
//! - [`optimizer`]: the bubble flow.
//! - [`cli`] and [`svg`]: configuration-driven runs and plots.
//!
//! ```
//! use soapgait::body::Shape;
//! use soapgait::gait::{self, Gait};
//! use soapgait::rft::Swimmer;
//!
//! let gait = Gait::circle(Shape::zeros(), 0.5, 60)?;
//! let dg = gait::displacement(&gait, &Swimmer::serpenoid())?;
//! assert!(dg.x.abs() > 1e-3);
//! # Ok::<(), soapgait::Error>(())
//! ```

pub mod body;
pub mod cli;
pub mod contour;
pub mod error;
pub mod fields;
pub mod gait;
pub mod optimizer;
pub mod rft;
pub mod se2;
pub mod source;
pub mod svg;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bodies.md")]
    mod bodies {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/height-functions.md")]
    mod height_functions {}
    #[doc = include_str!("../../../book/src/gaits.md")]
    mod gaits {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
