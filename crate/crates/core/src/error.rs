use thiserror::Error;

/// Errors raised anywhere in the discretization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain is empty: no grid cell lies inside the outline")]
    EmptyDomain,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("outline rectangle {0} is not aligned with the grid spacing")]
    OutlineNotAligned(usize),
    #[error("fracture {fracture}, segment {segment} cannot be represented by element edges")]
    FractureNotAligned { fracture: usize, segment: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("element {0} is not star-shaped with respect to its interior point")]
    NotStarShaped(usize),
    #[error("mesh carries no refinement tree; only grid-built meshes can be refined")]
    NotRefinable,
    #[error("unsupported polynomial order {0} (supported: 1..=3)")]
    UnsupportedOrder(usize),
    #[error("edge {0} has no side assignment for jump/average")]
    OrientationUnset(usize),
    #[error("permeability tensor of element {0} is not symmetric positive definite")]
    SingularK(usize),
    #[error("invalid problem data: {0}")]
    InvalidProblem(String),
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("linear system contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no exact solution available")]
    NoExactSolution,
    #[error("all marking indicators are zero")]
    AllZeroIndicators,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
