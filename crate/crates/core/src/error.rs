use thiserror::Error;

pub type Result<T, E = GeodistError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodistError {
    #[error("unsupported rank {0}: only 2D and 3D grids are supported")]
    BadRank(usize),
    #[error("dimension mismatch: rank {ndim} with {dims} extents and {spacing} spacings")]
    DimensionMismatch {
        ndim: usize,
        dims: usize,
        spacing: usize,
    },
    #[error("non-positive extent on axis {axis}")]
    NonPositiveExtent { axis: usize },
    #[error("non-positive spacing {value} on axis {axis}")]
    NonPositiveSpacing { axis: usize, value: f32 },
    #[error("data length {actual} does not match grid size {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("spacing mismatch: {left:?} vs {right:?}")]
    SpacingMismatch { left: Vec<f32>, right: Vec<f32> },
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("invalid {kind} value {value} at flat index {index}")]
    InvalidValue {
        kind: &'static str,
        index: usize,
        value: f32,
    },
    #[error("pass direction {direction:?} is not valid for a {ndim}D grid")]
    InvalidDirection {
        direction: crate::metric::PassDirection,
        ndim: usize,
    },
    #[error("seed mask is empty: no element >= 0.5")]
    EmptySeeds,
    #[error("mask complement is empty: every element >= 0.5")]
    EmptyComplement,
    #[error("no source: every element of the initial distance is INF_SENTINEL")]
    NoSource,
    #[error("failed to start worker pool: {0}")]
    WorkerPool(String),
}
