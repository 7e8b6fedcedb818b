//! Shared oracles for the integration tests.
//!
//! Profits here come from individual consumer choice with an outside option,
//! never from the model's threshold formulas, so they check the library
//! rather than restate it.

#![allow(dead_code)]

use vertcartel::choice::{profit, UnitDensity, Utility};
use vertcartel::equilibrium::NashSolution;
use vertcartel::extensions::hackner::HacknerMarket;
use vertcartel::market::Market;
use vertcartel::sampling::{
    instance_rng, sample_hackner, sample_market, CostMode, SampledHackner, SampledMarket,
};

pub fn r1() -> Market {
    Market::new(vec![1.0, 2.0], vec![0.5, 1.0], 1.0, 2.0).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Duopoly equilibrium from the two reaction functions solved by hand:
/// `p1 = (dv (th - 2 tl) + 2 c1 + c2) / 3`, `p2 = (dv (2 th - tl) + 2 c2 + c1) / 3`.
pub fn duopoly_prices(v: [f64; 2], c: [f64; 2], tl: f64, th: f64) -> [f64; 2] {
    let dv = v[1] - v[0];
    [
        (dv * (th - 2.0 * tl) + 2.0 * c[0] + c[1]) / 3.0,
        (dv * (2.0 * th - tl) + 2.0 * c[1] + c[0]) / 3.0,
    ]
}

pub fn choice_profit(market: &Market, prices: &[f64], i: usize) -> f64 {
    let density = UnitDensity {
        lo: market.theta_lo(),
        hi: market.theta_hi(),
    };
    profit(
        market.qualities(),
        prices,
        market.costs()[i],
        i,
        Utility::Additive,
        &density,
        true,
    )
}

pub fn hackner_choice_profit(hm: &HacknerMarket, prices: &[f64], i: usize) -> f64 {
    let m = hm.market();
    let density = UnitDensity {
        lo: m.theta_lo(),
        hi: m.theta_hi(),
    };
    profit(
        m.qualities(),
        prices,
        m.costs()[i],
        i,
        Utility::QualityScaled,
        &density,
        true,
    )
}

/// Largest gain any firm gets from a unilateral price on the grid
/// `lo_i, lo_i + step, ..., hi` where `lo_i` is the firm's cost.
pub fn grid_gain<F>(prices: &[f64], costs: &[f64], hi: f64, step: f64, profit_of: F) -> f64
where
    F: Fn(&[f64], usize) -> f64,
{
    let mut worst = f64::NEG_INFINITY;
    let mut trial = prices.to_vec();
    for i in 0..prices.len() {
        let base = profit_of(prices, i);
        let steps = ((hi - costs[i]) / step).floor() as usize;
        for k in 0..=steps {
            trial[i] = costs[i] + k as f64 * step;
            worst = worst.max(profit_of(&trial, i) - base);
        }
        trial[i] = prices[i];
    }
    worst
}

pub fn core_grid_gain(market: &Market, nash: &NashSolution, step: f64) -> f64 {
    let hi = market.theta_hi() * market.qualities()[market.n() - 1];
    grid_gain(nash.prices.as_slice(), market.costs(), hi, step, |p, i| {
        choice_profit(market, p, i)
    })
}

pub fn hackner_grid_gain(hm: &HacknerMarket, nash: &NashSolution, step: f64) -> f64 {
    let m = hm.market();
    grid_gain(
        nash.prices.as_slice(),
        m.costs(),
        m.theta_hi(),
        step,
        |p, i| hackner_choice_profit(hm, p, i),
    )
}

pub fn sampled(seed: u64, index: u64, n: usize, mode: CostMode) -> SampledMarket {
    sample_market(&mut instance_rng(seed, index), n, mode).expect("sampler finds a market")
}

pub fn sampled_hackner(seed: u64, index: u64, n: usize, mode: CostMode) -> SampledHackner {
    sample_hackner(&mut instance_rng(seed, index), n, mode).expect("sampler finds a market")
}
