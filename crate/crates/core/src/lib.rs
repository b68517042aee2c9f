//! Exact computations for contracting affine iterated function systems:
//! covering certificates, jet-space lifts of parametric families, the
//! flat-polynomial jet covering system and the realization of target jets
//! as continuations of limit-set points.

pub mod blender;
pub mod covering;
pub mod error;
pub mod flatpoly;
pub mod ifs;
pub mod interval;
pub mod jet;
pub mod jetcover;
pub mod linalg;
pub mod lp;
pub mod scalar;

pub use error::{Error, Result};
pub use ifs::{AffineMap, IFSystem, Itinerary};
pub use interval::{BoxN, Interval};
pub use linalg::Matrix;
pub use scalar::Scalar;
