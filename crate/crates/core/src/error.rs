use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map format error: {0}")]
    Format(String),
    #[error("position ({x:.3}, {y:.3}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cell {0} is not free")]
    NotFree(usize),
    #[error("grid dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vertex {0} does not exist")]
    UnknownVertex(usize),
    #[error("regions unreachable by every robot: {0:?}")]
    UnreachableRegions(Vec<usize>),
    #[error("no path from {from:?} to {to:?}")]
    NoPath { from: (usize, usize), to: (usize, usize) },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
