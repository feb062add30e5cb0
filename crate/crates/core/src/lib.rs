//! Boundary-preserving skew products with two attractors whose basins are
//! intermingled.
//!
//! * [`maps`]: the annulus and thickened-torus maps, exact base iteration,
//!   Jacobians, inverse branches and fixed points.
//! * [`lyapunov`]: normal and tangent exponents, the contraction radius and
//!   the certified immediate-stable-manifold length.
//! * [`basins`]: fate classification, deterministic parallel grid scans and
//!   intermingling statistics.
//! * [`experiments`]: segment propagation with slope tracking, long
//!   stable-manifold sets and inverse-branch pullbacks.

pub mod basins;
mod error;
pub mod experiments;
pub mod lyapunov;
pub mod maps;
mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
pub use maps::{Coord, Phase, PointA, PointT, SkewPoint, SkewSystem, SystemKind};
