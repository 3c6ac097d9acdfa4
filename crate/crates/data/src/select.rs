use cadpu_core::curvature::{sampling_weights, surface_variation_of};
use cadpu_core::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

/// Draws `m` weighted indices without replacement, renormalizing over the
/// remaining weights after every draw. Returned in draw order.
pub(crate) fn weighted_without_replacement(weights: &[f64], m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut w = weights.to_vec();
    let mut picked = Vec::with_capacity(m);
    for _ in 0..m {
        let total: f64 = w.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut choice = None;
        for (i, &wi) in w.iter().enumerate() {
            if wi > 0.0 {
                acc += wi;
                choice = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        let Some(i) = choice else { break };
        picked.push(i);
        w[i] = 0.0;
    }
    picked
}

/// Selects `m` points from `dense` with probabilities given by the
/// curvature-adaptive weights of their surface variation. The result keeps
/// the dense cloud's order and attributes, and carries the curvatures.
pub fn curvature_adaptive_select(
    dense: &PointCloud,
    m: usize,
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<PointCloud> {
    if m > dense.len() {
        return Err(cadpu_core::Error::TooManyRequested {
            requested: m,
            available: dense.len(),
        }
        .into());
    }
    let field = surface_variation_of(dense, k)?;
    let weights = sampling_weights(&field.values, epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = weighted_without_replacement(&weights.weights, m, &mut rng);
    idx.sort_unstable();
    let with_curv = dense.clone().set_curvatures(field.values)?;
    Ok(with_curv.select(&idx))
}
