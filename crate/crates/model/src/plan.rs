use std::cmp::Ordering;
use std::f64::consts::TAU;

use cadpu_core::curvature::{sampling_weights, CurvatureField};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Which input feature feeds each of the `r * N` output slots, and the 2D
/// grid corner appended to it.
///
/// Slots are ordered by source index; slots sharing a source form one group
/// and carry the first corners of [`grid_corners`] in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPlan {
    pub n: usize,
    pub r: usize,
    /// Source index per slot.
    pub sources: Vec<usize>,
    /// Grid corner per slot.
    pub grid: Vec<[i32; 2]>,
    /// `(source, first slot, slot count)` per group.
    pub groups: Vec<(usize, usize, usize)>,
    /// Round-robin slots before grouping.
    pub uniform: Vec<usize>,
    /// Weighted draws before grouping.
    pub adaptive: Vec<usize>,
}

impl ExpansionPlan {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// How many slots each input index received.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.n];
        for &s in &self.sources {
            m[s] += 1;
        }
        m
    }
}

fn angle(p: [i32; 2]) -> f64 {
    let a = (p[1] as f64).atan2(p[0] as f64);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn corner_order(a: &[i32; 2], b: &[i32; 2]) -> Ordering {
    let ring = |p: &[i32; 2]| p[0].abs().max(p[1].abs());
    let norm = |p: &[i32; 2]| p[0] * p[0] + p[1] * p[1];
    ring(a)
        .cmp(&ring(b))
        .then(norm(a).cmp(&norm(b)))
        .then(angle(*a).total_cmp(&angle(*b)))
}

/// First `count` integer lattice points in canonical order: by L-infinity
/// ring, then Euclidean norm, then counter-clockwise angle from +x.
pub fn grid_corners(count: usize) -> Vec<[i32; 2]> {
    let mut radius = 0i32;
    while ((2 * radius + 1) * (2 * radius + 1)) < count as i32 {
        radius += 1;
    }
    let mut pts: Vec<[i32; 2]> = (-radius..=radius)
        .flat_map(|x| (-radius..=radius).map(move |y| [x, y]))
        .collect();
    pts.sort_by(corner_order);
    pts.truncate(count);
    pts
}

/// `round(alpha * r * N)` round-robin slots plus the remainder drawn i.i.d.
/// from the curvature-adaptive weights.
pub fn plan_expansion(
    curvatures: &CurvatureField,
    alpha: f64,
    r: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ExpansionPlan> {
    let n = curvatures.len();
    if !(0.0..=1.0).contains(&alpha) || r < 2 || n == 0 {
        return Err(Error::InvalidInput(format!(
            "plan needs 0 <= alpha <= 1, r >= 2 and a nonempty field (alpha {alpha}, r {r}, n {n})"
        )));
    }
    let total = r * n;
    let u = ((alpha * total as f64).round() as usize).min(total);
    let uniform: Vec<usize> = (0..u).map(|i| i % n).collect();
    let adaptive: Vec<usize> = if u < total {
        let w = sampling_weights(&curvatures.values, epsilon)?;
        let dist = WeightedIndex::new(&w.weights)
            .map_err(|e| Error::InvalidInput(format!("sampling weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..total - u).map(|_| dist.sample(&mut rng)).collect()
    } else {
        Vec::new()
    };
    let mut counts = vec![0usize; n];
    for &s in uniform.iter().chain(&adaptive) {
        counts[s] += 1;
    }
    let corners = grid_corners(counts.iter().copied().max().unwrap_or(0));
    let mut sources = Vec::with_capacity(total);
    let mut grid = Vec::with_capacity(total);
    let mut groups = Vec::new();
    for (s, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        groups.push((s, sources.len(), c));
        sources.extend(std::iter::repeat_n(s, c));
        grid.extend_from_slice(&corners[..c]);
    }
    Ok(ExpansionPlan {
        n,
        r,
        sources,
        grid,
        groups,
        uniform,
        adaptive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_prefix() {
        let expected = [
            [0, 0],
            [1, 0],
            [0, 1],
            [-1, 0],
            [0, -1],
            [1, 1],
            [-1, 1],
            [-1, -1],
            [1, -1],
            [2, 0],
        ];
        assert_eq!(grid_corners(10), expected);
    }

    #[test]
    fn corners_distinct_for_large_groups() {
        let c = grid_corners(60);
        let mut d = c.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 60);
    }

    fn field(values: Vec<f64>) -> CurvatureField {
        CurvatureField { values, k_used: 8 }
    }

    #[test]
    fn full_duplication() {
        let p = plan_expansion(&field(vec![0.1; 10]), 1.0, 4, 0.01, 3).unwrap();
        assert_eq!(p.multiplicities(), vec![4; 10]);
        assert!(p.adaptive.is_empty());
        assert_eq!(&p.grid[..4], &grid_corners(4)[..]);
    }

    #[test]
    fn split_counts() {
        let p = plan_expansion(&field((0..256).map(|i| i as f64 / 800.0).collect()), 0.5, 4, 0.01, 1).unwrap();
        assert_eq!(p.uniform.len(), 512);
        assert_eq!(p.adaptive.len(), 512);
        assert_eq!(p.len(), 1024);
        assert!(p.multiplicities().iter().all(|&m| m >= 2));
    }

    #[test]
    fn bad_alpha() {
        assert!(plan_expansion(&field(vec![0.0; 4]), 1.5, 4, 0.01, 0).is_err());
        assert!(plan_expansion(&field(vec![0.0; 4]), 0.5, 1, 0.01, 0).is_err());
    }
}
