use thiserror::Error;

/// Errors produced by grid construction, voxelization, fitting, and I/O.
#[derive(Debug, Error)]
pub enum NerveError {
    #[error("invalid grid resolution {0}: must be in 2..=1024")]
    InvalidResolution(u32),

    #[error("cube index ({0}, {1}, {2}) out of range for resolution {3}")]
    IndexOutOfRange(u32, u32, u32, u32),

    #[error("point ({0}, {1}, {2}) outside the [-1,1]^3 domain")]
    PointOutOfDomain(f64, f64, f64),

    #[error("point ({0}, {1}, {2}) outside the extent of cube ({3}, {4}, {5})")]
    PointOutsideCube(f64, f64, f64, u32, u32, u32),

    #[error("orientation flag on grid-boundary face: cube ({0}, {1}, {2}), axis {3}")]
    BoundaryOrientation(u32, u32, u32, usize),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("singular quadratic system: all tangents are parallel; a positive lambda is required")]
    SingularQef,

    #[error("fitting failed: {0}")]
    FitFailed(String),

    #[error("grid format error: {0}")]
    Format(String),

    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(u32, u32),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NerveError>;
