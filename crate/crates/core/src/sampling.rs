//! Seeded random markets for the property verifiers.
//!
//! Every instance draws from its own ChaCha stream keyed by `(seed, index)`,
//! so results do not depend on evaluation order or thread count. Markets
//! whose equilibrium fails the interiority/coverage chain are rejected and
//! redrawn; the number of rejections is reported alongside the market.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{check_h1, solve_nash_direct, NashSolution};
use crate::extensions::hackner::{hackner_equilibrium, hackner_h1, HacknerMarket};
use crate::market::{validate_market, Market, MarketParams};

pub const QUALITY_RANGE: (f64, f64) = (0.5, 5.0);
pub const THETA_LO_RANGE: (f64, f64) = (0.5, 2.0);
pub const THETA_WIDTH_RANGE: (f64, f64) = (0.5, 2.0);

/// Rejections allowed per instance before sampling gives up.
pub const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    /// A base cost plus nonnegative increments along the quality ladder.
    Increasing,
    /// Every firm shares the base cost.
    Equal,
}

/// Independent random stream for instance `index` under `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Smallest quality gap used for `n` firms: 0.1, shrunk when `n` firms
/// spaced 0.1 apart would not leave room for randomness in the quality range.
pub fn min_quality_gap(n: usize) -> f64 {
    let span = QUALITY_RANGE.1 - QUALITY_RANGE.0;
    0.1f64.min(span / (2.0 * (n.max(2) - 1) as f64))
}

/// Sorted qualities in the quality range with gaps of at least [`min_quality_gap`].
pub fn draw_qualities<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let gap = min_quality_gap(n);
    let top = QUALITY_RANGE.1 - gap * (n - 1) as f64;
    let mut raw: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(QUALITY_RANGE.0..top))
        .collect();
    raw.sort_by(f64::total_cmp);
    raw.iter()
        .enumerate()
        .map(|(k, q)| q + gap * k as f64)
        .collect()
}

/// One unvalidated draw.
///
/// The base cost is a fraction of what the lowest taste pays for the bottom
/// variant. Increasing costs step by `t_k (v_{k+1} - v_k)` with `t_k` sorted
/// uniform draws on the taste interval, so cost gaps track what marginal
/// consumers are willing to pay for each quality step.
pub fn draw_params<R: Rng>(rng: &mut R, n: usize, mode: CostMode) -> MarketParams {
    draw_with_scaling(rng, n, mode, false)
}

/// Draw for quality-scaled utility. There the equilibrium depends on the
/// scaled costs `v_k c_k`, so those step by `t_k (v_{k+1} - v_k)`; the
/// resulting `c_k` is a running weighted average of `c_1` and the sorted
/// `t_k`, hence still weakly increasing.
pub fn draw_hackner_params<R: Rng>(rng: &mut R, n: usize, mode: CostMode) -> MarketParams {
    draw_with_scaling(rng, n, mode, true)
}

fn draw_with_scaling<R: Rng>(rng: &mut R, n: usize, mode: CostMode, scaled: bool) -> MarketParams {
    let qualities = draw_qualities(rng, n);
    let theta_lo = rng.gen_range(THETA_LO_RANGE.0..THETA_LO_RANGE.1);
    let theta_hi = theta_lo + rng.gen_range(THETA_WIDTH_RANGE.0..THETA_WIDTH_RANGE.1);
    let base = rng.gen_range(0.01..0.5) * theta_lo * qualities[0];
    let mut costs = Vec::with_capacity(n);
    costs.push(base);
    match mode {
        CostMode::Increasing => {
            let mut tastes: Vec<f64> = (1..n).map(|_| rng.gen_range(theta_lo..theta_hi)).collect();
            tastes.sort_by(f64::total_cmp);
            let mut level = if scaled { base * qualities[0] } else { base };
            for k in 1..n {
                level += tastes[k - 1] * (qualities[k] - qualities[k - 1]);
                let c = if scaled { level / qualities[k] } else { level };
                // Rounding in the division must not break weak monotonicity.
                costs.push(c.max(costs[k - 1]));
            }
        }
        CostMode::Equal => costs.resize(n, base),
    }
    MarketParams {
        qualities,
        costs,
        theta_lo,
        theta_hi,
    }
}

/// A market that passed the interiority/coverage chain.
#[derive(Debug, Clone)]
pub struct SampledMarket {
    pub market: Market,
    pub nash: NashSolution,
    /// Draws rejected before this one.
    pub discarded: usize,
}

/// Rejection sampling for the covered-market model. `None` only when
/// [`MAX_ATTEMPTS`] draws all fail.
pub fn sample_market<R: Rng>(rng: &mut R, n: usize, mode: CostMode) -> Option<SampledMarket> {
    for discarded in 0..MAX_ATTEMPTS {
        let Ok(market) = validate_market(draw_params(rng, n, mode)) else {
            continue;
        };
        let Ok(nash) = solve_nash_direct(&market) else {
            continue;
        };
        if check_h1(&market, &nash).passes() {
            return Some(SampledMarket {
                market,
                nash,
                discarded,
            });
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct SampledHackner {
    pub market: HacknerMarket,
    pub nash: NashSolution,
    pub discarded: usize,
}

/// Rejection sampling for the quality-scaled-utility variant.
pub fn sample_hackner<R: Rng>(rng: &mut R, n: usize, mode: CostMode) -> Option<SampledHackner> {
    for discarded in 0..MAX_ATTEMPTS {
        let Ok(market) = validate_market(draw_hackner_params(rng, n, mode)) else {
            continue;
        };
        let Ok(hm) = HacknerMarket::new(market) else {
            continue;
        };
        let Ok(nash) = hackner_equilibrium(&hm) else {
            continue;
        };
        if hackner_h1(&hm, &nash).passes() {
            return Some(SampledHackner {
                market: hm,
                nash,
                discarded,
            });
        }
    }
    None
}
