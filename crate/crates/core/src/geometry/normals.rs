use super::{neighborhood_covariance, sym_eigen3, KnnIndex, Point3, PointCloud};
use crate::{Error, Result};

const DEGENERATE_EIGENVALUE: f64 = 1e-12;

/// Output of [`estimate_normals`].
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub cloud: PointCloud,
    /// Indices whose neighborhood had no defined plane (normal set to +z).
    pub degenerate: Vec<usize>,
}

/// Per-point normals from the smallest-eigenvalue eigenvector of the
/// k-neighborhood covariance.
///
/// Normals point away from the cloud centroid. A normal exactly orthogonal to
/// the centroid direction is flipped toward +z, then +y, then +x.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalEstimate> {
    if cloud.len() <= k {
        return Err(Error::TooFewPoints {
            k,
            got: cloud.len(),
        });
    }
    let index = KnnIndex::build(cloud)?;
    let centroid = cloud.centroid().ok_or(Error::EmptyInput)?;
    let pts = cloud.points();
    let mut normals = Vec::with_capacity(pts.len());
    let mut degenerate = Vec::new();
    for (i, &p) in pts.iter().enumerate() {
        let nb: Vec<Point3> = index.neighbors_of(i, k).iter().map(|&j| pts[j]).collect();
        let eig = sym_eigen3(&neighborhood_covariance(p, &nb)?)?;
        if eig.eigenvalues[1].abs() <= DEGENERATE_EIGENVALUE {
            normals.push(Point3::new(0.0, 0.0, 1.0));
            degenerate.push(i);
            continue;
        }
        normals.push(orient(eig.eigenvectors[0], p - centroid));
    }
    Ok(NormalEstimate {
        cloud: cloud.clone().set_normals(normals)?,
        degenerate,
    })
}

fn orient(n: Point3, outward: Point3) -> Point3 {
    let d = n.dot(outward);
    let flip = if d != 0.0 {
        d < 0.0
    } else if n.z != 0.0 {
        n.z < 0.0
    } else if n.y != 0.0 {
        n.y < 0.0
    } else {
        n.x < 0.0
    };
    if flip {
        -n
    } else {
        n
    }
}
