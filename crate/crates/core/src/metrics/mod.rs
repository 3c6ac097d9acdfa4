//! Point-set distances.
//!
//! Chamfer and Hausdorff use non-squared Euclidean nearest-neighbor
//! distances. EMD is the minimum total Euclidean cost over bijections between
//! two equal-size sets, solved exactly (Hungarian) or to a (1 + eps) factor
//! (auction with eps-scaling).

mod auction;
mod hungarian;

use crate::geometry::{KnnIndex, Point3, PointCloud};
use crate::{Error, Result};

pub use auction::{auction_assignment, AuctionStats};
pub use hungarian::hungarian;

/// Largest problem [`emd_exact`] accepts.
pub const EXACT_LIMIT: usize = 512;

/// A bijection from set A to set B with its total Euclidean cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    pub cost: f64,
}

fn nearest_distances(from: &[Point3], to: &KnnIndex) -> Vec<f64> {
    from.iter()
        .map(|&p| to.query_with_distances(p, 1)[0].1)
        .collect()
}

fn directional(a: &PointCloud, b: &PointCloud) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ia = KnnIndex::build(a)?;
    let ib = KnnIndex::build(b)?;
    Ok((nearest_distances(a.points(), &ib), nearest_distances(b.points(), &ia)))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Mean nearest-neighbor distance from each point of `a` to `b`.
pub fn directional_mean(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(mean(&directional(a, b)?.0))
}

/// Symmetric Chamfer distance `(mean_a d(a, B) + mean_b d(b, A)) / 2`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let (ab, ba) = directional(a, b)?;
    Ok(0.5 * (mean(&ab) + mean(&ba)))
}

/// Hausdorff distance `max(max_a d(a, B), max_b d(b, A))`.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let (ab, ba) = directional(a, b)?;
    Ok(max(&ab).max(max(&ba)))
}

/// Chamfer and Hausdorff in one pass.
pub fn chamfer_hausdorff(a: &PointCloud, b: &PointCloud) -> Result<(f64, f64)> {
    let (ab, ba) = directional(a, b)?;
    Ok((0.5 * (mean(&ab) + mean(&ba)), max(&ab).max(max(&ba))))
}

fn cost_matrix(a: &[Point3], b: &[Point3]) -> Vec<f64> {
    let mut c = Vec::with_capacity(a.len() * b.len());
    for &p in a {
        c.extend(b.iter().map(|&q| p.distance(q)));
    }
    c
}

fn check_sizes(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Total cost of `mapping`, recomputed from coordinates.
pub fn assignment_cost(a: &[Point3], b: &[Point3], mapping: &[usize]) -> f64 {
    a.iter()
        .zip(mapping)
        .map(|(&p, &j)| p.distance(b[j]))
        .sum()
}

/// Optimal EMD assignment via the Hungarian algorithm.
pub fn emd_exact(a: &PointCloud, b: &PointCloud) -> Result<Assignment> {
    check_sizes(a, b)?;
    let n = a.len();
    if n > EXACT_LIMIT {
        return Err(Error::TooLargeForExact {
            got: n,
            limit: EXACT_LIMIT,
        });
    }
    let mapping = hungarian(&cost_matrix(a.points(), b.points()), n);
    let cost = assignment_cost(a.points(), b.points(), &mapping);
    Ok(Assignment { mapping, cost })
}

/// `(1 + epsilon_frac)`-optimal EMD assignment via the auction algorithm.
pub fn emd_auction(a: &PointCloud, b: &PointCloud, epsilon_frac: f64) -> Result<Assignment> {
    check_sizes(a, b)?;
    let (mapping, _) = auction_assignment(&cost_matrix(a.points(), b.points()), a.len(), epsilon_frac)?;
    let cost = assignment_cost(a.points(), b.points(), &mapping);
    Ok(Assignment { mapping, cost })
}

/// EMD loss under a fixed matching and its gradient with respect to `pred`.
pub fn frozen_matching_loss(pred: &[Point3], gt: &[Point3], mapping: &[usize]) -> (f64, Vec<Point3>) {
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(mapping)
        .map(|(&q, &j)| {
            let d = q - gt[j];
            let r = d.norm();
            loss += r;
            if r > 0.0 {
                d / r
            } else {
                Point3::ZERO
            }
        })
        .collect();
    (loss, grad)
}

/// Auction EMD between `pred` and `gt` plus its gradient with the matching frozen.
pub fn emd_loss_and_grad(
    pred: &PointCloud,
    gt: &PointCloud,
    epsilon_frac: f64,
) -> Result<(f64, Vec<Point3>, Assignment)> {
    let assignment = emd_auction(pred, gt, epsilon_frac)?;
    let (loss, grad) = frozen_matching_loss(pred.points(), gt.points(), &assignment.mapping);
    Ok((loss, grad, assignment))
}
