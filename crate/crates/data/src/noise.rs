use cadpu_core::{Point3, PointCloud};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::Result;

/// Perturbs every coordinate by an independent `N(0, std^2)` draw. Normals
/// are kept; curvatures are dropped.
pub fn add_gaussian_noise(cloud: &PointCloud, std: f64, seed: u64) -> Result<PointCloud> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(cadpu_core::Error::InvalidParameter(format!("noise std must be >= 0, got {std}")).into());
    }
    if std == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, std).expect("std checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = cloud
        .points()
        .iter()
        .map(|p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            *p + Point3::new(dx, dy, dz)
        })
        .collect();
    let out = PointCloud::new(points)?;
    Ok(match cloud.normals() {
        Some(n) => out.set_normals(n.to_vec())?,
        None => out,
    })
}

/// Similarity mapping `p -> (p - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Point3,
    pub scale: f64,
    /// Set when every point coincided and `scale` fell back to 1.
    pub degenerate: bool,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization {
        center: Point3::ZERO,
        scale: 1.0,
        degenerate: false,
    };

    pub fn apply(&self, p: Point3) -> Point3 {
        (p - self.center) / self.scale
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        p * self.scale + self.center
    }

    pub fn apply_cloud(&self, cloud: &PointCloud) -> Result<PointCloud> {
        Ok(cloud.map_points(|p| self.apply(p))?)
    }

    pub fn invert_cloud(&self, cloud: &PointCloud) -> Result<PointCloud> {
        Ok(cloud.map_points(|p| self.invert(p))?)
    }

    /// Centroid and largest centered norm of `cloud`.
    pub fn fit(cloud: &PointCloud) -> Result<Self> {
        let center = cloud.centroid().ok_or(cadpu_core::Error::EmptyInput)?;
        let scale = cloud
            .points()
            .iter()
            .map(|p| (*p - center).norm())
            .fold(0.0, f64::max);
        Ok(if scale > 0.0 {
            Self {
                center,
                scale,
                degenerate: false,
            }
        } else {
            Self {
                center,
                scale: 1.0,
                degenerate: true,
            }
        })
    }
}

/// Centers `cloud` on its centroid and scales it into the unit ball.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> Result<(PointCloud, Normalization)> {
    let n = Normalization::fit(cloud)?;
    Ok((n.apply_cloud(cloud)?, n))
}
