//! Core numerics for curvature-adaptive point set upsampling.
//!
//! - [`geometry`]: points, clouds, kNN indexing, 3x3 symmetric eigensolver,
//!   normal estimation, farthest point sampling and patch clustering.
//! - [`curvature`]: surface variation, curvature-adaptive sampling weights and
//!   the curvature regularizer with its analytic gradient.
//! - [`metrics`]: Chamfer, Hausdorff and earth mover's distances.

pub mod curvature;
mod error;
pub mod geometry;
pub mod metrics;

pub use error::{Error, Result};
pub use geometry::{KnnIndex, Point3, PointCloud, SymEig3, SymMat3};
