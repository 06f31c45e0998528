//! Geodesic, Euclidean and hybrid distance transforms over 2D images and 3D
//! volumes.
//!
//! Two raster-scan engines relax the same grid-graph metric:
//!
//! * [`scan_serial`]: a single-threaded two-phase scan over the full causal
//!   half-neighbourhood, used as the baseline.
//! * [`scan_parallel`]: directional passes along each axis in both
//!   orientations, where every element of a row (2D) or plane (3D) is
//!   relaxed independently from the previous row/plane and can therefore be
//!   processed by several workers at once.
//!
//! [`oracle`] holds an exact multi-source Dijkstra used to validate both
//! engines, and [`transforms`] builds the user-facing suite (geodesic,
//! Euclidean, generalised, signed, geodesic morphology and symmetric
//! filtering) on top of them.

pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod metric;
pub mod oracle;
pub mod scan_parallel;
pub mod scan_serial;
pub mod transforms;

pub use error::{GeodistError, Result};
pub use grid::{grids_approx_equal, ScalarGrid, TransformParams, INF_SENTINEL};
pub use metric::{NeighborOffset, PassDirection};
pub use scan_parallel::{FixpointOutcome, ScanEngine};
pub use transforms::{Engine, Relaxed, Solver};
