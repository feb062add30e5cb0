//! The concrete skew products: the annulus map over `x -> 3x` and the
//! thickened-torus map over `(x, y) -> (3x + y, 2x + y)`, both with fiber
//! map `z -> z + cos(2πx)·(z/a)·(1 - z)`, plus trigonometric perturbations.

mod dynamics;
mod phase;
mod space;
mod system;

pub use phase::{wrap_unit, Coord, Phase};
pub use space::{BaseSpace, Jacobian, PointA, PointT, SkewPoint, TorusBase};
pub use system::{PerturbationSpec, SkewSystem, SystemKind, SystemSpec, TrigTerm};
