use crate::{Error, Result};
use std::collections::VecDeque;

/// Bid budget for a single scaling phase before giving up.
const MAX_BIDS_PER_PHASE: u64 = 200_000_000;
const SCALING_FACTOR: f64 = 4.0;
/// Phases allowed past the nominal final epsilon while chasing the certificate.
const EXTRA_PHASES: usize = 40;

/// Diagnostics from one auction solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionStats {
    pub phases: usize,
    pub bids: u64,
    pub final_epsilon: f64,
    /// Best certified lower bound on the optimal cost.
    pub lower_bound: f64,
}

/// Min-cost assignment within a factor `1 + epsilon_frac` of optimal.
///
/// Forward Gauss-Seidel auction on benefits `-cost`. Prices persist across
/// phases while eps shrinks by 4x from `max_cost / 2` to
/// `epsilon_frac * lower_bound / n`; eps-complementary slackness then bounds
/// the suboptimality by `n * eps`. The lower bound is the larger of the
/// row/column minimum sums and the dual value of the current prices. Solving
/// stops early once the cost is certified within the factor.
pub fn auction_assignment(cost: &[f64], n: usize, epsilon_frac: f64) -> Result<(Vec<usize>, AuctionStats)> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if !(epsilon_frac > 0.0) || !epsilon_frac.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon_frac must be positive, got {epsilon_frac}"
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), zero_stats()));
    }
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    if n == 1 || max_cost == 0.0 {
        return Ok(((0..n).collect(), zero_stats()));
    }

    let mut lower_bound = static_lower_bound(cost, n);
    let mut prices = vec![0.0f64; n];
    let mut eps = max_cost / 2.0;
    let mut stats = AuctionStats {
        phases: 0,
        bids: 0,
        final_epsilon: eps,
        lower_bound,
    };
    let mut extra = 0usize;
    loop {
        let person_to_obj = run_phase(cost, n, &mut prices, eps, &mut stats)?;
        stats.phases += 1;
        stats.final_epsilon = eps;
        let total: f64 = person_to_obj
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j])
            .sum();
        lower_bound = lower_bound.max(dual_lower_bound(cost, n, &prices));
        stats.lower_bound = lower_bound;
        let target_eps = epsilon_frac * lower_bound / n as f64;
        if total <= (1.0 + epsilon_frac) * lower_bound || (target_eps > 0.0 && eps <= target_eps) {
            return Ok((person_to_obj, stats));
        }
        if target_eps <= 0.0 || eps <= target_eps * (1.0 + 1e-12) {
            extra += 1;
        }
        if extra > EXTRA_PHASES || eps < max_cost * 1e-15 {
            // exhausted float resolution; eps-CS still bounds the gap by n * eps
            return Ok((person_to_obj, stats));
        }
        eps = if target_eps > 0.0 {
            (eps / SCALING_FACTOR).max(target_eps)
        } else {
            eps / SCALING_FACTOR
        };
    }
}

fn zero_stats() -> AuctionStats {
    AuctionStats {
        phases: 0,
        bids: 0,
        final_epsilon: 0.0,
        lower_bound: 0.0,
    }
}

fn static_lower_bound(cost: &[f64], n: usize) -> f64 {
    let rows: f64 = (0..n)
        .map(|i| cost[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    let cols: f64 = (0..n)
        .map(|j| (0..n).map(|i| cost[i * n + j]).fold(f64::INFINITY, f64::min))
        .sum();
    rows.max(cols)
}

/// Weak duality: for any prices, `sum_i max_j(-c_ij - p_j) + sum_j p_j`
/// bounds the best total benefit, so its negation bounds the optimal cost.
fn dual_lower_bound(cost: &[f64], n: usize, prices: &[f64]) -> f64 {
    let profits: f64 = (0..n)
        .map(|i| {
            cost[i * n..(i + 1) * n]
                .iter()
                .zip(prices)
                .map(|(c, p)| -c - p)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    -(profits + prices.iter().sum::<f64>())
}

fn run_phase(
    cost: &[f64],
    n: usize,
    prices: &mut [f64],
    eps: f64,
    stats: &mut AuctionStats,
) -> Result<Vec<usize>> {
    const NONE: usize = usize::MAX;
    let mut person_to_obj = vec![NONE; n];
    let mut obj_to_person = vec![NONE; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut bids = 0u64;
    while let Some(i) = queue.pop_front() {
        let row = &cost[i * n..(i + 1) * n];
        let mut best = (f64::NEG_INFINITY, NONE);
        let mut second = f64::NEG_INFINITY;
        for (j, (&c, &p)) in row.iter().zip(prices.iter()).enumerate() {
            let v = -c - p;
            if v > best.0 {
                second = best.0;
                best = (v, j);
            } else if v > second {
                second = v;
            }
        }
        let j = best.1;
        prices[j] += best.0 - second + eps;
        let prev = obj_to_person[j];
        if prev != NONE {
            person_to_obj[prev] = NONE;
            queue.push_back(prev);
        }
        obj_to_person[j] = i;
        person_to_obj[i] = j;
        bids += 1;
        if bids > MAX_BIDS_PER_PHASE {
            return Err(Error::NoConvergence(format!(
                "phase {} at eps {eps:e}: {bids} bids, {} persons unassigned",
                stats.phases + 1,
                queue.len() + 1
            )));
        }
    }
    stats.bids += bids;
    Ok(person_to_obj)
}

#[cfg(test)]
mod tests {
    use super::super::hungarian;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn total(cost: &[f64], n: usize, m: &[usize]) -> f64 {
        m.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
    }

    #[test]
    fn within_factor_of_hungarian() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 5, 20, 60] {
            for _ in 0..10 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
                let (m, stats) = auction_assignment(&cost, n, 0.01).unwrap();
                let mut seen = m.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let opt = total(&cost, n, &hungarian(&cost, n));
                let got = total(&cost, n, &m);
                assert!(got >= opt - 1e-12);
                assert!(got <= 1.01 * opt + 1e-12, "{got} vs {opt}");
                assert!(stats.lower_bound <= opt + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(auction_assignment(&[0.0], 1, 0.0).is_err());
    }
}
