//! Cartel pricing above the coverage cap, so that the lowest tastes abstain.
//!
//! With `p1c > theta_lo v_1` only tastes above `p1c / v_1` buy. The cartel
//! keeps market shares fixed: every firm serves the fraction
//! `s = (theta_hi - p1c / v_1) / (theta_hi - theta_lo)` of its equilibrium
//! demand interval, which pins the collusive schedule down recursively from
//! the bottom. Firm `i`'s collusive price exceeds `p_i* + dp` by `x_i >= 0`,
//! and its deviation price exceeds `p_i* + dp/2` by `y_i`.

use serde::{Deserialize, Serialize};

use crate::choice::{self, TasteMeasure, UnitDensity, Utility};
use crate::collusion::{max_collusive_bottom_price, PayoffTriple, P1C_SLACK};
use crate::equilibrium::{best_response_in, check_h1, NashSolution};
use crate::error::{ModelError, Result};
use crate::market::{Market, PriceVector};
use crate::numerics::golden_section_max;

/// Which demand regime the bottom firm's best deviation lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottomDeviation {
    /// The deviator undercuts far enough to serve every taste from `theta_lo`.
    Covers,
    /// Some low tastes still abstain at the deviation price.
    LeavesUncovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncoveredReport {
    pub p1c: f64,
    /// `p1c - p_1*`.
    pub delta_p: f64,
    /// Fraction of each equilibrium demand interval the cartel keeps.
    pub s: f64,
    /// Lowest buying taste `p1c / v_1` followed by the `n - 1` collusive
    /// marginal consumers.
    pub thresholds: Vec<f64>,
    /// Extra uplift beyond `dp`; `x[0] = 0`.
    pub x: Vec<f64>,
    /// Extra deviation uplift beyond `dp / 2`. Intermediates weight the
    /// neighbours' `x` by the opposite quality gaps; the bottom firm uses
    /// `x[1] / 2` and the top firm `x[n-2] / 2`.
    pub y: Vec<f64>,
    pub collusive_prices: PriceVector,
    pub deviation_prices: PriceVector,
    pub critical_deltas: Vec<f64>,
    pub bottom_deviation: BottomDeviation,
}

fn check_firm(market: &Market, i: usize) -> Result<()> {
    if i >= market.n() {
        return Err(ModelError::IndexOutOfRange {
            index: i,
            limit: market.n(),
        });
    }
    Ok(())
}

/// Best bottom-firm reply to the collusive price of firm 2 when tastes below
/// `p / v_1` abstain. Demand is concave in `p`, so the optimum is the
/// covered-regime vertex when that vertex still covers the market and the
/// uncovered-regime vertex otherwise.
fn bottom_deviation(market: &Market, collusive: &[f64]) -> Result<(f64, BottomDeviation)> {
    let covered = best_response_in(market, collusive, 0)?;
    let cap = max_collusive_bottom_price(market);
    if covered <= cap {
        return Ok((covered, BottomDeviation::Covers));
    }
    let v = market.qualities();
    let vertex = 0.5 * (collusive[1] * v[0] / v[1] + market.costs()[0]);
    Ok((vertex.max(cap), BottomDeviation::LeavesUncovered))
}

/// Bottom-firm demand when rivals hold `prices[1..]` and tastes below
/// `p_1 / v_1` abstain.
fn bottom_demand(market: &Market, prices: &[f64]) -> f64 {
    let v = market.qualities();
    let upper = ((prices[1] - prices[0]) / (v[1] - v[0])).min(market.theta_hi());
    let lower = market.theta_lo().max(prices[0] / v[0]);
    (upper - lower).max(0.0)
}

/// Fixed-share collusive schedule for `theta_lo v_1 <= p1c < theta_hi v_1`.
///
/// At `p1c = theta_lo v_1` the schedule coincides with the covered one.
pub fn uncovered_collusive_prices(
    market: &Market,
    nash: &NashSolution,
    p1c: f64,
) -> Result<UncoveredReport> {
    check_h1(market, nash).into_result()?;
    let v = market.qualities();
    let (lo_t, hi_t) = (market.theta_lo(), market.theta_hi());
    let lo = max_collusive_bottom_price(market);
    let hi = hi_t * v[0];
    let below = p1c < lo - P1C_SLACK * lo.abs().max(1.0);
    if !p1c.is_finite() || below || p1c >= hi {
        return Err(ModelError::P1cOutOfRange { p1c, lo, hi });
    }
    let n = market.n();
    let s = ((hi_t - p1c / v[0]) / (hi_t - lo_t)).min(1.0);
    let delta_p = p1c - nash.prices[0];

    let mut thresholds = Vec::with_capacity(n);
    thresholds.push((p1c / v[0]).max(lo_t));
    for i in 0..n - 1 {
        let next = thresholds[i] + s * nash.shares[i];
        thresholds.push(next);
    }
    let mut prices = Vec::with_capacity(n);
    prices.push(p1c);
    for i in 0..n - 1 {
        prices.push(prices[i] + thresholds[i + 1] * (v[i + 1] - v[i]));
    }
    let x: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                prices[i] - nash.prices[i] - delta_p
            }
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                0.5 * x[1]
            } else if i == n - 1 {
                0.5 * x[n - 2]
            } else {
                ((v[i] - v[i - 1]) * x[i + 1] + (v[i + 1] - v[i]) * x[i - 1])
                    / (2.0 * (v[i + 1] - v[i - 1]))
            }
        })
        .collect();

    let (bottom_price, bottom_regime) = bottom_deviation(market, &prices)?;
    let mut deviation = Vec::with_capacity(n);
    deviation.push(bottom_price);
    for i in 1..n {
        deviation.push(best_response_in(market, &prices, i)?);
    }

    let mut report = UncoveredReport {
        p1c,
        delta_p,
        s,
        thresholds,
        x,
        y,
        collusive_prices: prices.into(),
        deviation_prices: deviation.into(),
        critical_deltas: Vec::new(),
        bottom_deviation: bottom_regime,
    };
    report.critical_deltas = (0..n)
        .map(|i| uncovered_critical_delta(market, nash, &report, i))
        .collect::<Result<_>>()?;
    Ok(report)
}

/// `z_i = (1 - s) m (m + dp + x) + m (2y - x) + y (dp + y)`.
pub fn z_term(s: f64, margin: f64, delta_p: f64, x: f64, y: f64) -> f64 {
    (1.0 - s) * margin * (margin + delta_p + x) + margin * (2.0 * y - x) + y * (delta_p + y)
}

/// `r_i = m (dp + 2y) + y (dp + y)`.
pub fn r_term(margin: f64, delta_p: f64, y: f64) -> f64 {
    margin * (delta_p + 2.0 * y) + y * (delta_p + y)
}

/// Critical discount factor of firm `i` under the uncovered schedule:
/// `(dp^2/4 + z_i) / (dp^2/4 + r_i)`.
///
/// When the bottom firm's best deviation leaves low tastes unserved, its
/// deviation demand has a different slope and the factor is assembled from
/// that regime's payoffs instead.
pub fn uncovered_critical_delta(
    market: &Market,
    nash: &NashSolution,
    report: &UncoveredReport,
    i: usize,
) -> Result<f64> {
    check_firm(market, i)?;
    if i == 0 && report.bottom_deviation == BottomDeviation::LeavesUncovered {
        let triple = bottom_payoffs_uncovered_regime(market, nash, report);
        return Ok(triple.ratio());
    }
    let (m, dp) = (nash.margins[i], report.delta_p);
    let q = 0.25 * dp * dp;
    let z = z_term(report.s, m, dp, report.x[i], report.y[i]);
    let r = r_term(m, dp, report.y[i]);
    Ok((q + z) / (q + r))
}

fn bottom_payoffs_uncovered_regime(
    market: &Market,
    nash: &NashSolution,
    report: &UncoveredReport,
) -> PayoffTriple {
    let c = market.costs()[0];
    let mut deviating = report.collusive_prices.clone().into_inner();
    deviating[0] = report.deviation_prices[0];
    let k = market.profit_weight(0);
    let m = nash.margins[0];
    PayoffTriple {
        collusive: (report.p1c - c) * report.s * nash.shares[0],
        deviation: (deviating[0] - c) * bottom_demand(market, &deviating),
        nash: k * m * m,
    }
}

/// Payoffs from consumer choice alone: each taste buys the best variant or
/// nothing, and the deviation price maximises the resulting profit by
/// golden-section search over `[c_i, theta_hi v_i]`.
pub fn uncovered_payoffs_direct(
    market: &Market,
    nash: &NashSolution,
    report: &UncoveredReport,
    i: usize,
) -> Result<PayoffTriple> {
    check_firm(market, i)?;
    let v = market.qualities();
    let c = market.costs()[i];
    let density = UnitDensity {
        lo: market.theta_lo(),
        hi: market.theta_hi(),
    };
    let profit =
        |prices: &[f64]| choice::profit(v, prices, c, i, Utility::Additive, &density, true);
    let collusive = report.collusive_prices.as_slice();
    let mut trial = collusive.to_vec();
    let best = golden_section_max(c, market.theta_hi() * v[i], 1e-13, |p| {
        let mut t = collusive.to_vec();
        t[i] = p;
        profit(&t)
    });
    trial[i] = best;
    Ok(PayoffTriple {
        collusive: profit(collusive),
        deviation: profit(&trial),
        nash: profit(nash.prices.as_slice()),
    })
}

/// Whether firm `i`'s deviation leaves every rival with a nonempty demand
/// interval under consumer choice. The closed forms assume it does; outside
/// this domain the deviator would be absorbing a rival's whole market.
pub fn deviation_keeps_rivals(market: &Market, report: &UncoveredReport, i: usize) -> bool {
    let v = market.qualities();
    let density = UnitDensity {
        lo: market.theta_lo(),
        hi: market.theta_hi(),
    };
    let mut prices = report.collusive_prices.clone().into_inner();
    prices[i] = report.deviation_prices[i];
    (0..market.n()).all(|j| {
        choice::served_interval(v, &prices, j, Utility::Additive, density.support(), true).is_some()
    })
}

/// `(pi_d - pi_c) / (pi_d - pi*)` from [`uncovered_payoffs_direct`].
pub fn uncovered_critical_delta_direct(
    market: &Market,
    nash: &NashSolution,
    report: &UncoveredReport,
    i: usize,
) -> Result<f64> {
    Ok(uncovered_payoffs_direct(market, nash, report, i)?.ratio())
}

/// Left side of the sign condition for `d delta_i / d m_i < 0`:
///
/// ```text
/// (1 - s) m {2y(dp + y) + m(dp + 2y) + dp^2/2} - s (dp + x) {y(dp + y) + dp^2/4}
/// ```
pub fn monotonicity_condition(
    nash: &NashSolution,
    report: &UncoveredReport,
    i: usize,
) -> Result<f64> {
    if i >= nash.n() {
        return Err(ModelError::IndexOutOfRange {
            index: i,
            limit: nash.n(),
        });
    }
    let (s, m, dp) = (report.s, nash.margins[i], report.delta_p);
    let (x, y) = (report.x[i], report.y[i]);
    let first = (1.0 - s) * m * (2.0 * y * (dp + y) + m * (dp + 2.0 * y) + 0.5 * dp * dp);
    let second = s * (dp + x) * (y * (dp + y) + 0.25 * dp * dp);
    Ok(first - second)
}

/// Whether firm `i`'s critical factor falls as its margin rises, i.e. the
/// sign condition is strictly negative. Out-of-range firms report `false`.
pub fn uncovered_monotonicity_holds(
    _market: &Market,
    nash: &NashSolution,
    report: &UncoveredReport,
    i: usize,
) -> bool {
    monotonicity_condition(nash, report, i).is_ok_and(|value| value < 0.0)
}
