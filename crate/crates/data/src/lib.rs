//! Data plumbing for curvature-adaptive upsampling: XYZ and ASCII PLY files,
//! triangle meshes and area-uniform sampling, built-in analytic surfaces,
//! curvature-adaptive point selection, training pairs, noise and
//! normalization.

mod error;
pub mod fixtures;
pub mod io;
mod mesh;
mod noise;
mod pairs;
mod select;

pub use error::{Error, Result};
pub use mesh::{sample_mesh_uniform, TriMesh};
pub use noise::{add_gaussian_noise, normalize_unit_sphere, Normalization};
pub use pairs::{make_train_pairs, read_dataset, write_dataset, Manifest, ManifestEntry, PairConfig, TrainPair};
pub use select::curvature_adaptive_select;
