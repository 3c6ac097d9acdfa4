//! Discrete curvature quantities on point sets.
//!
//! Surface variation drives curvature-adaptive sampling; the two angle
//! surrogates form the fairness regularizer used during training. Gradients
//! treat neighbor sets and normal assignments as constants.

use crate::geometry::{neighborhood_covariance, sym_eigen3, KnnIndex, Point3, PointCloud};
use crate::{Error, Result};

/// Distances below this contribute nothing to an angle surrogate.
pub const COINCIDENT_DISTANCE: f64 = 1e-12;
const DEGENERATE_TRACE: f64 = 1e-15;

/// Per-point curvature estimates aligned with a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub k_used: usize,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalized curvature-adaptive sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    pub weights: Vec<f64>,
    pub epsilon: f64,
}

/// Surface variation `l1 / (l1 + l2 + l3)` of each point's k-neighborhood
/// covariance (the point itself excluded from its neighborhood).
pub fn surface_variation(cloud: &PointCloud, index: &KnnIndex, k: usize) -> Result<CurvatureField> {
    if k == 0 || cloud.len() <= k {
        return Err(Error::TooFewPoints {
            k,
            got: cloud.len(),
        });
    }
    if index.len() != cloud.len() {
        return Err(Error::SizeMismatch(index.len(), cloud.len()));
    }
    let pts = cloud.points();
    let mut values = Vec::with_capacity(pts.len());
    for (i, &p) in pts.iter().enumerate() {
        let nb: Vec<Point3> = index.neighbors_of(i, k).iter().map(|&j| pts[j]).collect();
        let eig = sym_eigen3(&neighborhood_covariance(p, &nb)?)?;
        let [l1, l2, l3] = eig.eigenvalues.map(|l| l.max(0.0));
        let sum = l1 + l2 + l3;
        values.push(if sum < DEGENERATE_TRACE { 0.0 } else { l1 / sum });
    }
    Ok(CurvatureField { values, k_used: k })
}

/// Convenience wrapper building the index internally.
pub fn surface_variation_of(cloud: &PointCloud, k: usize) -> Result<CurvatureField> {
    let index = KnnIndex::build(cloud)?;
    surface_variation(cloud, &index, k)
}

/// `w_i = ln(k_i + 1 + eps) / sum_j ln(k_j + 1 + eps)`.
pub fn sampling_weights(curvatures: &[f64], epsilon: f64) -> Result<SamplingWeights> {
    if curvatures.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if let Some((index, &value)) = curvatures
        .iter()
        .enumerate()
        .find(|(_, c)| !(**c >= 0.0) || !c.is_finite())
    {
        return Err(Error::NegativeCurvature { index, value });
    }
    let logs: Vec<f64> = curvatures.iter().map(|&c| (c + epsilon).ln_1p()).collect();
    let total: f64 = logs.iter().sum();
    Ok(SamplingWeights {
        weights: logs.into_iter().map(|l| l / total).collect(),
        epsilon,
    })
}

fn angle_term(from: Point3, to: Point3, normal: Point3) -> f64 {
    let d = to - from;
    let r = d.norm();
    if r < COINCIDENT_DISTANCE {
        return 0.0;
    }
    (d.dot(normal) / r).abs()
}

/// Gradient of `|<(to - from)/|to - from|, n>|` with respect to `to`
/// (the gradient with respect to `from` is its negation).
fn angle_term_grad(from: Point3, to: Point3, normal: Point3) -> Point3 {
    let d = to - from;
    let r = d.norm();
    if r < COINCIDENT_DISTANCE {
        return Point3::ZERO;
    }
    let u = d / r;
    let s = u.dot(normal);
    if s == 0.0 {
        return Point3::ZERO;
    }
    (normal - u * s) * (s.signum() / r)
}

/// Mean |cos| between each neighbor direction and the normal at point `q_index`,
/// neighbors taken from the cloud itself.
pub fn surrogate_pred(q_index: usize, cloud: &PointCloud, index: &KnnIndex, k: usize) -> Result<f64> {
    let normals = cloud.normals().ok_or(Error::MissingNormals)?;
    if k == 0 || cloud.len() <= k {
        return Err(Error::TooFewPoints {
            k,
            got: cloud.len(),
        });
    }
    let pts = cloud.points();
    let q = pts[q_index];
    let n = normals[q_index];
    let sum: f64 = index
        .neighbors_of(q_index, k)
        .iter()
        .map(|&j| angle_term(q, pts[j], n))
        .sum();
    Ok(sum / k as f64)
}

/// Mean |cos| between directions from `q` to its k nearest ground-truth
/// points and those points' own normals.
pub fn surrogate_gt(q: Point3, gt: &PointCloud, gt_index: &KnnIndex, k: usize) -> Result<f64> {
    let normals = gt.normals().ok_or(Error::MissingNormals)?;
    if k == 0 || gt.len() <= k {
        return Err(Error::TooFewPoints { k, got: gt.len() });
    }
    let pts = gt.points();
    let sum: f64 = gt_index
        .query(q, k)
        .iter()
        .map(|&j| angle_term(q, pts[j], normals[j]))
        .sum();
    Ok(sum / k as f64)
}

/// Neighborhoods and normals of the regularizer, frozen at one configuration.
///
/// Evaluating [`value`](Self::value) and [`gradient`](Self::gradient) at
/// perturbed coordinates keeps the discrete selections fixed, which is exactly
/// the convention the training gradient uses.
#[derive(Debug, Clone)]
pub struct RegularizerStencil {
    k: usize,
    normals: Vec<Point3>,
    pred_neighbors: Vec<Vec<usize>>,
    gt_neighbors: Vec<Vec<usize>>,
    gt_points: Vec<Point3>,
    gt_normals: Vec<Point3>,
}

impl RegularizerStencil {
    pub fn build(pred: &PointCloud, gt: &PointCloud, k: usize) -> Result<Self> {
        let gt_normals = gt.normals().ok_or(Error::MissingNormals)?;
        if pred.is_empty() {
            return Err(Error::EmptyInput);
        }
        if k == 0 || pred.len() <= k {
            return Err(Error::TooFewPoints {
                k,
                got: pred.len(),
            });
        }
        if gt.len() <= k {
            return Err(Error::TooFewPoints { k, got: gt.len() });
        }
        let gt_index = KnnIndex::build(gt)?;
        let pred_index = KnnIndex::build(pred)?;
        let mut normals = Vec::with_capacity(pred.len());
        let mut pred_neighbors = Vec::with_capacity(pred.len());
        let mut gt_neighbors = Vec::with_capacity(pred.len());
        for (i, &q) in pred.points().iter().enumerate() {
            let gt_nb = gt_index.query(q, k);
            // nearest ground-truth point is the first of its k neighbors
            normals.push(gt_normals[gt_nb[0]]);
            gt_neighbors.push(gt_nb);
            pred_neighbors.push(pred_index.neighbors_of(i, k));
        }
        Ok(Self {
            k,
            normals,
            pred_neighbors,
            gt_neighbors,
            gt_points: gt.points().to_vec(),
            gt_normals: gt_normals.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Normal assigned to each predicted point (that of its nearest gt point).
    pub fn assigned_normals(&self) -> &[Point3] {
        &self.normals
    }

    fn check(&self, pred: &[Point3]) -> Result<()> {
        if pred.len() != self.len() {
            return Err(Error::SizeMismatch(pred.len(), self.len()));
        }
        Ok(())
    }

    /// Per-point `(predicted-set surrogate, ground-truth surrogate)`.
    pub fn terms(&self, pred: &[Point3]) -> Result<Vec<(f64, f64)>> {
        self.check(pred)?;
        let k = self.k as f64;
        Ok(pred
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let n = self.normals[i];
                let own: f64 = self.pred_neighbors[i]
                    .iter()
                    .map(|&j| angle_term(q, pred[j], n))
                    .sum();
                let emb: f64 = self.gt_neighbors[i]
                    .iter()
                    .map(|&j| angle_term(q, self.gt_points[j], self.gt_normals[j]))
                    .sum();
                (own / k, emb / k)
            })
            .collect())
    }

    pub fn value(&self, pred: &[Point3]) -> Result<f64> {
        let terms = self.terms(pred)?;
        Ok(terms.iter().map(|(a, b)| a + b).sum::<f64>() / pred.len() as f64)
    }

    pub fn gradient(&self, pred: &[Point3]) -> Result<Vec<Point3>> {
        self.check(pred)?;
        let scale = 1.0 / (self.k as f64 * pred.len() as f64);
        let mut grad = vec![Point3::ZERO; pred.len()];
        for (i, &q) in pred.iter().enumerate() {
            let n = self.normals[i];
            for &j in &self.pred_neighbors[i] {
                let g = angle_term_grad(q, pred[j], n) * scale;
                grad[j] += g;
                grad[i] -= g;
            }
            for &j in &self.gt_neighbors[i] {
                grad[i] -= angle_term_grad(q, self.gt_points[j], self.gt_normals[j]) * scale;
            }
        }
        Ok(grad)
    }
}

/// Mean over predicted points of both angle surrogates. Each predicted point
/// borrows the normal of its nearest ground-truth point.
pub fn regularizer(pred: &PointCloud, gt: &PointCloud, k: usize) -> Result<f64> {
    RegularizerStencil::build(pred, gt, k)?.value(pred.points())
}

/// Exact gradient of [`regularizer`] with frozen neighborhoods and normals.
pub fn regularizer_grad(pred: &PointCloud, gt: &PointCloud, k: usize) -> Result<Vec<Point3>> {
    RegularizerStencil::build(pred, gt, k)?.gradient(pred.points())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_plane(n: usize, step: f64) -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(Point3::new(i as f64 * step, j as f64 * step, 0.0));
            }
        }
        v
    }

    fn up(n: usize) -> Vec<Point3> {
        vec![Point3::new(0.0, 0.0, 1.0); n]
    }

    #[test]
    fn weights_symmetric_cases() {
        let w = sampling_weights(&[0.0, 0.0], 0.01).unwrap();
        assert_eq!(w.weights, vec![0.5, 0.5]);
        for c in [0.0, 0.1, 1.0 / 3.0] {
            let w = sampling_weights(&[c; 4], 0.01).unwrap();
            for x in w.weights {
                assert!((x - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn weights_extended_precision() {
        // ln(2.01) / (ln(2.01) + ln(1.01)) evaluated with 40-digit constants
        let ln201 = 0.698134722070984357464549818505346126_f64;
        let ln101 = 0.009950330853168082848215357544260705_f64;
        let expected = ln201 / (ln201 + ln101);
        let w = sampling_weights(&[1.0, 0.0], 0.01).unwrap();
        assert!((w.weights[0] - expected).abs() < 1e-15);
        assert!(w.weights[0] > 0.9);
        assert!((w.weights[0] + w.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_reject_negative() {
        assert!(matches!(
            sampling_weights(&[0.1, -0.1], 0.01),
            Err(Error::NegativeCurvature { index: 1, .. })
        ));
        assert!(sampling_weights(&[0.1], 0.0).is_err());
    }

    #[test]
    fn plane_has_zero_variation() {
        let c = PointCloud::new(grid_plane(8, 0.1)).unwrap();
        let f = surface_variation_of(&c, 8).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coincident_has_zero_variation() {
        let c = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0); 10]).unwrap();
        let f = surface_variation_of(&c, 4).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variation_requires_enough_points() {
        let c = PointCloud::new(grid_plane(2, 1.0)).unwrap();
        assert!(matches!(surface_variation_of(&c, 4), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn pred_surrogate_cases() {
        let pts = grid_plane(5, 1.0);
        let c = PointCloud::with_normals(pts.clone(), up(pts.len())).unwrap();
        let idx = KnnIndex::build(&c).unwrap();
        assert_eq!(surrogate_pred(12, &c, &idx, 8).unwrap(), 0.0);

        let c = PointCloud::with_normals(
            vec![Point3::ZERO, Point3::new(0.0, 0.0, 2.0)],
            up(2),
        )
        .unwrap();
        let idx = KnnIndex::build(&c).unwrap();
        assert_eq!(surrogate_pred(0, &c, &idx, 1).unwrap(), 1.0);
        let bare = PointCloud::new(vec![Point3::ZERO; 3]).unwrap();
        assert_eq!(
            surrogate_pred(0, &bare, &KnnIndex::build(&bare).unwrap(), 1).unwrap_err(),
            Error::MissingNormals
        );
    }

    #[test]
    fn gt_surrogate_closed_form() {
        let pts = grid_plane(9, 0.25);
        let gt = PointCloud::with_normals(pts.clone(), up(pts.len())).unwrap();
        let idx = KnnIndex::build(&gt).unwrap();
        let base = Point3::new(1.0, 1.0, 0.0);
        assert_eq!(surrogate_gt(base, &gt, &idx, 8).unwrap(), 0.0);
        let mut last = 0.0;
        for delta in [0.01, 0.05, 0.1, 0.2] {
            let q = base + Point3::new(0.0, 0.0, delta);
            let v = surrogate_gt(q, &gt, &idx, 8).unwrap();
            // neighbors of a lifted point are the same planar neighbors
            let expected: f64 = idx
                .query(base, 8)
                .iter()
                .map(|&j| {
                    let d2 = base.distance_squared(pts[j]);
                    delta / (delta * delta + d2).sqrt()
                })
                .sum::<f64>()
                / 8.0;
            assert!((v - expected).abs() < 1e-14);
            assert!(v > last && v <= 1.0);
            last = v;
        }
    }

    #[test]
    fn regularizer_zero_on_plane_positive_off_plane() {
        let pts = grid_plane(10, 0.1);
        let gt = PointCloud::with_normals(pts.clone(), up(pts.len())).unwrap();
        let sub: Vec<Point3> = pts.iter().step_by(3).copied().collect();
        let pred = PointCloud::new(sub.clone()).unwrap();
        assert_eq!(regularizer(&pred, &gt, 6).unwrap(), 0.0);
        let g = regularizer_grad(&pred, &gt, 6).unwrap();
        assert!(g.iter().all(|v| v.x == 0.0 && v.y == 0.0));

        let mut bumped = sub;
        bumped[7].z = 0.05;
        let pred = PointCloud::new(bumped).unwrap();
        assert!(regularizer(&pred, &gt, 6).unwrap() > 0.0);
    }

    #[test]
    fn regularizer_is_sum_of_surrogates() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let gt_pts: Vec<Point3> = (0..80)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let gt_n: Vec<Point3> = (0..80)
            .map(|_| {
                Point3::new(rng.random_range(-1.0..1.0), rng.random(), 0.3)
                    .normalized()
                    .unwrap()
            })
            .collect();
        let gt = PointCloud::with_normals(gt_pts, gt_n.clone()).unwrap();
        let pred_pts: Vec<Point3> = (0..40)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let k = 6;
        let gt_index = KnnIndex::build(&gt).unwrap();
        let normals: Vec<Point3> = pred_pts
            .iter()
            .map(|&q| gt_n[gt_index.nearest(q)])
            .collect();
        let pred = PointCloud::with_normals(pred_pts.clone(), normals).unwrap();
        let pred_index = KnnIndex::build(&pred).unwrap();
        let mut expected = 0.0;
        for (i, &q) in pred_pts.iter().enumerate() {
            expected += surrogate_pred(i, &pred, &pred_index, k).unwrap();
            expected += surrogate_gt(q, &gt, &gt_index, k).unwrap();
        }
        expected /= 40.0;
        let got = regularizer(&pred.clone().without_normals(), &gt, k).unwrap();
        assert!((got - expected).abs() < 1e-13);
    }

    #[test]
    fn gradient_two_point_closed_form() {
        // pred {a, b}, gt {g0, g1}, k = 1: hand-differentiated sum of four terms
        let a = Point3::new(0.1, 0.2, 0.3);
        let b = Point3::new(0.5, -0.1, 0.6);
        let g0 = Point3::new(0.0, 0.0, 0.0);
        let g1 = Point3::new(1.0, 0.0, 1.0);
        let n0 = Point3::new(0.0, 0.6, 0.8);
        let n1 = Point3::new(0.8, 0.0, 0.6);
        let gt = PointCloud::with_normals(vec![g0, g1], vec![n0, n1]).unwrap();
        let pred = PointCloud::new(vec![a, b]).unwrap();
        let grad = regularizer_grad(&pred, &gt, 1).unwrap();
        // a is nearer g0 (normal n0); b is nearer g1 (normal n1)
        let dir = |d: Point3, n: Point3| {
            let r = d.norm();
            let s = d.dot(n) / r;
            (n - d * (s / r)) * (s.signum() / r)
        };
        // R = 1/2 [ |<b-a,n0>|/|b-a| + |<g0-a,n0>|/|g0-a| + |<a-b,n1>|/|a-b| + |<g1-b,n1>|/|g1-b| ]
        let ga = (dir(b - a, n0) * -1.0 - dir(g0 - a, n0) + dir(a - b, n1)) * 0.5;
        let gb = (dir(b - a, n0) - dir(a - b, n1) - dir(g1 - b, n1)) * 0.5;
        assert!((grad[0] - ga).norm() < 1e-14, "{:?} vs {:?}", grad[0], ga);
        assert!((grad[1] - gb).norm() < 1e-14);
    }
}
