use thiserror::Error;

/// Errors raised by the map, exponent, basin and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inverse branch undefined: {0}")]
    NotInvertible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature needs a Lebesgue-preserving base map; use a Birkhoff average instead")]
    RequiresLebesgueBase,

    #[error("tangent vector must be nonzero")]
    ZeroVector,

    #[error("point is not on an invariant boundary (z = {0})")]
    OffBoundary(f64),

    #[error("no contraction radius on the search grid satisfies the neighborhood condition")]
    NoValidC,

    #[error("grid has no samples")]
    EmptyGrid,

    #[error("grid window is not symmetric under (x, z) -> (x + 1/2, 1 - z)")]
    NotSymmetric,

    #[error("bad segment: {0}")]
    BadSegment(String),

    #[error("tau diverged at the starting point; no positive stable-manifold estimate")]
    TauDiverged,

    #[error("pullback count exceeded the cap of {0} iterations")]
    DeltaTooSmall(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
