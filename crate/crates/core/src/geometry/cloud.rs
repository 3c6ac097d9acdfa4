use super::Point3;
use crate::{Error, Result};

/// Ordered 3D points with optional per-point normals and curvatures.
///
/// Optional attributes, when present, always have one entry per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Point3>>,
    curvatures: Option<Vec<f64>>,
}

impl PointCloud {
    /// Builds a cloud from positions, rejecting non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            points,
            normals: None,
            curvatures: None,
        })
    }

    pub fn with_normals(points: Vec<Point3>, normals: Vec<Point3>) -> Result<Self> {
        Self::new(points)?.set_normals(normals)
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().copied().map(Point3::from).collect())
    }

    pub fn set_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                field: "normals",
                got: normals.len(),
                expected: self.points.len(),
            });
        }
        if let Some(i) = normals.iter().position(|n| !n.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn set_curvatures(mut self, curvatures: Vec<f64>) -> Result<Self> {
        if curvatures.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                field: "curvatures",
                got: curvatures.len(),
                expected: self.points.len(),
            });
        }
        if let Some((index, &value)) = curvatures
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c >= 0.0) || !c.is_finite())
        {
            return Err(Error::NegativeCurvature { index, value });
        }
        self.curvatures = Some(curvatures);
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn curvatures(&self) -> Option<&[f64]> {
        self.curvatures.as_deref()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Sub-cloud of the given indices, carrying every present attribute along.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
            curvatures: self
                .curvatures
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Appends another cloud. Attributes survive only if both sides carry them.
    pub fn extend(&mut self, other: &PointCloud) {
        self.normals = match (self.normals.take(), other.normals()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(b)) if self.points.is_empty() => Some(b.to_vec()),
            _ => None,
        };
        self.curvatures = match (self.curvatures.take(), other.curvatures()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(b)) if self.points.is_empty() => Some(b.to_vec()),
            _ => None,
        };
        self.points.extend_from_slice(&other.points);
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().copied().sum::<Point3>() / self.points.len() as f64)
    }

    /// Applies `f` to every position, leaving attributes untouched.
    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Result<PointCloud> {
        let points: Vec<Point3> = self.points.iter().map(|&p| f(p)).collect();
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(PointCloud {
            points,
            normals: self.normals.clone(),
            curvatures: self.curvatures.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let err = PointCloud::from_arrays(&[[0.0, 0.0, 0.0], [f64::NAN, 0.0, 0.0]]).unwrap_err();
        assert_eq!(err, Error::NonFinite(1));
    }

    #[test]
    fn attribute_lengths_checked() {
        let c = PointCloud::from_arrays(&[[0.0; 3], [1.0; 3]]).unwrap();
        assert!(c.clone().set_normals(vec![Point3::ZERO]).is_err());
        assert!(c.set_curvatures(vec![0.1, -0.2]).is_err());
    }

    #[test]
    fn select_carries_normals() {
        let c = PointCloud::with_normals(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)],
            vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 1.0, 0.0)],
        )
        .unwrap();
        let s = c.select(&[1]);
        assert_eq!(s.points(), &[Point3::new(1.0, 0.0, 0.0)]);
        assert_eq!(s.normals().unwrap(), &[Point3::new(0.0, 1.0, 0.0)]);
    }
}
