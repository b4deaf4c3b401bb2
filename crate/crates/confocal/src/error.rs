use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadric parameter {0} coincides with a degenerate value")]
    DegenerateQuadric(f64),
    #[error("point is not on the quadric (residual {0:e})")]
    NotOnQuadric(f64),
    #[error("gradient vanishes at the point")]
    ZeroGradient,
    #[error("pole lies at infinity")]
    PoleAtInfinity,
    #[error("invalid elliptic coordinates: {0}")]
    InvalidCoords(String),
    #[error("line lies on the quadric")]
    LineOnQuadric,
    #[error("degenerate line: {0}")]
    DegenerateLine(String),
    #[error("tangential incidence (|v.n| = {0:e})")]
    TangentialIncidence(f64),
    #[error("line has no real intersection with the quadric")]
    NoRealIntersection,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("lines do not pass through the common point")]
    LinesNotConcurrent,
    #[error("no forward intersection")]
    NoForwardIntersection,
    #[error("point is not strictly inside the boundary")]
    StartOutside,
    #[error("degenerate caustic")]
    DegenerateCaustic,
    #[error("branch point: P(x0) = {0:e}")]
    BranchPoint(f64),
    #[error("skew index {0} out of range")]
    InvalidSkew(i64),
    #[error("no sign change over the bracket ({0:e}, {1:e})")]
    NoSignChange(f64, f64),
    #[error("caustic mismatch: {0}")]
    CausticMismatch(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("no confocal conic fits the points (residual {0:e})")]
    NoFit(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Validation(_) | Error::InvalidFamily(_) | Error::DimensionMismatch { .. } => 3,
            Error::Io(_) => 4,
            Error::DegenerateQuadric(_)
            | Error::NotOnQuadric(_)
            | Error::ZeroGradient
            | Error::PoleAtInfinity
            | Error::InvalidCoords(_)
            | Error::LineOnQuadric
            | Error::DegenerateLine(_) => 10,
            Error::TangentialIncidence(_)
            | Error::NoRealIntersection
            | Error::DegenerateConfiguration(_)
            | Error::LinesNotConcurrent => 11,
            Error::NoForwardIntersection | Error::StartOutside | Error::DegenerateCaustic => 12,
            Error::BranchPoint(_) | Error::InvalidSkew(_) | Error::NoSignChange(..) => 13,
            Error::CausticMismatch(_) | Error::SearchFailed(_) => 14,
            Error::EmptyGrid | Error::NoFit(_) => 15,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
