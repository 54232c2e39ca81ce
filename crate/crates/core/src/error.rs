use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("requested level {requested} exceeds stored level {stored}")]
    BeyondResolution { requested: u32, stored: u32 },
    #[error("path must start at the origin")]
    NonZeroStart,
    #[error("path length {got} does not match 2^level+1 points of dimension {dim}")]
    BadLength { got: usize, dim: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("grid level {0} too large to materialize")]
    GridTooLarge(u32),
    #[error("rotation angle {angle} is within 1e-8 of pi (cut locus)")]
    CutLocus { angle: f64 },
    #[error("group path does not start at the identity")]
    NonIdentityStart,
    #[error("path is outside the tube")]
    OutsideTube,
    #[error("form is not closed: defect {0:e}")]
    NotClosed(f64),
    #[error("point outside domain")]
    OutsideDomain,
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
