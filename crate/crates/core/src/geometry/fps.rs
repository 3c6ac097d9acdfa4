use super::{Point3, PointCloud};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Greedy farthest point sampling; the first index is drawn uniformly from `seed`.
pub fn farthest_point_sampling(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    check(cloud.len(), m)?;
    if m == 0 {
        return Ok(Vec::new());
    }
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..cloud.len());
    farthest_point_sampling_from(cloud.points(), m, first)
}

/// Farthest point sampling from a fixed starting index.
///
/// Each step picks the point maximizing its distance to the chosen set, lower
/// index on ties.
pub fn farthest_point_sampling_from(
    points: &[Point3],
    m: usize,
    first: usize,
) -> Result<Vec<usize>> {
    check(points.len(), m)?;
    if m == 0 {
        return Ok(Vec::new());
    }
    if first >= points.len() {
        return Err(Error::InvalidParameter(format!(
            "start index {first} out of range"
        )));
    }
    let mut chosen = Vec::with_capacity(m);
    let mut min_d2 = vec![f64::INFINITY; points.len()];
    let mut next = first;
    for _ in 0..m {
        chosen.push(next);
        let c = points[next];
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, (d, p)) in min_d2.iter_mut().zip(points).enumerate() {
            *d = d.min(p.distance_squared(c));
            if *d > best.0 {
                best = (*d, i);
            }
        }
        next = best.1;
    }
    Ok(chosen)
}

fn check(n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(Error::TooManyRequested {
            requested: m,
            available: n,
        });
    }
    Ok(())
}
