//! Deterministic spatial primitives.

mod cloud;
mod eigen;
mod fps;
mod knn;
mod normals;
mod patches;
mod point;

pub use cloud::PointCloud;
pub use eigen::{neighborhood_covariance, sym_eigen3, SymEig3, SymMat3};
pub use fps::{farthest_point_sampling, farthest_point_sampling_from};
pub use knn::KnnIndex;
pub use normals::{estimate_normals, NormalEstimate};
pub use patches::cluster_into_patches;
pub use point::Point3;
