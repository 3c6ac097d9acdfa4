use super::{farthest_point_sampling, PointCloud};
use crate::{Error, Result};

/// Splits a cloud into `num_patches` spatially compact patches of equal size.
///
/// Seeds come from farthest point sampling. Every point first joins its
/// nearest seed; points in over-full patches then move to non-full seeds,
/// cheapest distance increase first, until every patch holds exactly
/// `len / num_patches` points. Patches are returned in seed order with sorted
/// member indices.
pub fn cluster_into_patches(
    cloud: &PointCloud,
    num_patches: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if num_patches == 0 || n % num_patches != 0 {
        return Err(Error::Indivisible {
            len: n,
            parts: num_patches,
        });
    }
    let capacity = n / num_patches;
    let seeds = farthest_point_sampling(cloud, num_patches, seed)?;
    let pts = cloud.points();
    let dist: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| seeds.iter().map(|&s| p.distance(pts[s])).collect())
        .collect();

    let mut owner: Vec<usize> = dist
        .iter()
        .map(|row| {
            (0..num_patches)
                .min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
                .unwrap()
        })
        .collect();
    let mut count = vec![0usize; num_patches];
    for &o in &owner {
        count[o] += 1;
    }

    if count.iter().any(|&c| c > capacity) {
        // Costs never change, so one sorted pass is equivalent to repeatedly
        // taking the cheapest valid move.
        let mut moves: Vec<(f64, usize, usize)> = Vec::new();
        for (i, row) in dist.iter().enumerate() {
            if count[owner[i]] <= capacity {
                continue;
            }
            for t in 0..num_patches {
                if count[t] < capacity {
                    moves.push((row[t] - row[owner[i]], i, t));
                }
            }
        }
        moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let original = owner.clone();
        for (_, i, t) in moves {
            let from = owner[i];
            if from != original[i] || count[from] <= capacity || count[t] >= capacity {
                continue;
            }
            owner[i] = t;
            count[from] -= 1;
            count[t] += 1;
        }
    }

    let mut patches = vec![Vec::with_capacity(capacity); num_patches];
    for (i, &o) in owner.iter().enumerate() {
        patches[o].push(i);
    }
    debug_assert!(patches.iter().all(|p| p.len() == capacity));
    Ok(patches)
}
