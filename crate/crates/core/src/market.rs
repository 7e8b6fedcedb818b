//! Model primitives: qualities, unit costs and the taste interval.
//!
//! Consumers are spread uniformly on `[theta_lo, theta_hi]` and buying variant
//! `i` at price `p_i` yields `theta * v_i - p_i`. Demand is measured as the
//! length of the taste interval a firm serves (unit density), so shares sum to
//! `theta_hi - theta_lo` in a covered market.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Unvalidated market description, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub qualities: Vec<f64>,
    pub costs: Vec<f64>,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

/// A validated market. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Market {
    qualities: Vec<f64>,
    costs: Vec<f64>,
    theta_lo: f64,
    theta_hi: f64,
}

fn positive(name: impl Into<String>, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonpositiveParameter {
            name: name.into(),
            value,
        })
    }
}

/// Checks every model inequality and returns the validated market.
///
/// Comparisons are strict and exact: no epsilon is applied.
pub fn validate_market(raw: MarketParams) -> Result<Market> {
    let MarketParams {
        qualities,
        costs,
        theta_lo,
        theta_hi,
    } = raw;
    let n = qualities.len();
    if n < 2 {
        return Err(ModelError::TooFewFirms { n });
    }
    if costs.len() != n {
        return Err(ModelError::LengthMismatch {
            qualities: n,
            costs: costs.len(),
        });
    }
    for (i, &v) in qualities.iter().enumerate() {
        positive(format!("v[{i}]"), v)?;
    }
    for (i, &c) in costs.iter().enumerate() {
        positive(format!("c[{i}]"), c)?;
    }
    positive("theta_lo", theta_lo)?;
    positive("theta_hi", theta_hi)?;
    if theta_lo >= theta_hi {
        return Err(ModelError::IntervalViolation { theta_lo, theta_hi });
    }
    for i in 1..n {
        if qualities[i] <= qualities[i - 1] {
            return Err(ModelError::QualityOrderViolation {
                index: i,
                value: qualities[i],
                prev_value: qualities[i - 1],
            });
        }
    }
    for i in 1..n {
        if costs[i] < costs[i - 1] {
            return Err(ModelError::CostOrderViolation {
                index: i,
                value: costs[i],
                prev_value: costs[i - 1],
            });
        }
    }
    Ok(Market {
        qualities,
        costs,
        theta_lo,
        theta_hi,
    })
}

impl Market {
    pub fn new(qualities: Vec<f64>, costs: Vec<f64>, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        validate_market(MarketParams {
            qualities,
            costs,
            theta_lo,
            theta_hi,
        })
    }

    pub fn n(&self) -> usize {
        self.qualities.len()
    }

    pub fn qualities(&self) -> &[f64] {
        &self.qualities
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn theta_lo(&self) -> f64 {
        self.theta_lo
    }

    pub fn theta_hi(&self) -> f64 {
        self.theta_hi
    }

    pub fn params(&self) -> MarketParams {
        MarketParams {
            qualities: self.qualities.clone(),
            costs: self.costs.clone(),
            theta_lo: self.theta_lo,
            theta_hi: self.theta_hi,
        }
    }

    /// `v[k+1] - v[k]`, the quality step above firm `k`.
    pub fn quality_gap(&self, k: usize) -> f64 {
        self.qualities[k + 1] - self.qualities[k]
    }

    /// Largest price anyone would pay: `theta_hi * v_n`.
    pub fn max_price(&self) -> f64 {
        self.theta_hi * self.qualities[self.n() - 1]
    }

    /// Slope constant `K_i` linking a firm's equilibrium demand to its margin.
    ///
    /// Intermediate firms: `(v_{i+1} - v_{i-1}) / ((v_{i+1} - v_i)(v_i - v_{i-1}))`;
    /// bottom and top firms: `1 / (adjacent quality gap)`.
    pub fn profit_weight(&self, i: usize) -> f64 {
        let n = self.n();
        if i == 0 {
            1.0 / self.quality_gap(0)
        } else if i == n - 1 {
            1.0 / self.quality_gap(n - 2)
        } else {
            let v = &self.qualities;
            (v[i + 1] - v[i - 1]) / ((v[i + 1] - v[i]) * (v[i] - v[i - 1]))
        }
    }

    fn check_prices(&self, prices: &[f64]) -> Result<()> {
        if prices.len() != self.n() {
            return Err(ModelError::PriceLength {
                expected: self.n(),
                got: prices.len(),
            });
        }
        Ok(())
    }

    /// All `n - 1` marginal consumers for a price vector.
    pub fn thresholds(&self, prices: &[f64]) -> Result<Vec<f64>> {
        self.check_prices(prices)?;
        Ok((0..self.n() - 1)
            .map(|k| (prices[k + 1] - prices[k]) / self.quality_gap(k))
            .collect())
    }

    /// Demand intervals from the covered-market profit equations:
    /// `theta_1 - theta_lo`, `theta_i - theta_{i-1}`, `theta_hi - theta_{n-1}`.
    /// Entries may be negative when the price vector leaves the interior.
    pub fn shares(&self, prices: &[f64]) -> Result<Vec<f64>> {
        let thetas = self.thresholds(prices)?;
        Ok(shares_from_thresholds(
            &thetas,
            self.theta_lo,
            self.theta_hi,
        ))
    }

    pub fn profits(&self, prices: &[f64]) -> Result<Vec<f64>> {
        let shares = self.shares(prices)?;
        Ok(prices
            .iter()
            .zip(&self.costs)
            .zip(shares)
            .map(|((p, c), s)| (p - c) * s)
            .collect())
    }
}

pub(crate) fn shares_from_thresholds(thetas: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = thetas.len() + 1;
    (0..n)
        .map(|i| {
            let upper = if i == n - 1 { hi } else { thetas[i] };
            let lower = if i == 0 { lo } else { thetas[i - 1] };
            upper - lower
        })
        .collect()
}

/// Taste level indifferent between firm `k` and firm `k + 1` (`k` in `0..n-1`):
/// `(p_{k+1} - p_k) / (v_{k+1} - v_k)`.
pub fn marginal_consumer(prices: &PriceVector, market: &Market, k: usize) -> Result<f64> {
    let limit = market.n() - 1;
    if k >= limit {
        return Err(ModelError::IndexOutOfRange { index: k, limit });
    }
    market.check_prices(prices.as_slice())?;
    Ok((prices[k + 1] - prices[k]) / market.quality_gap(k))
}

/// One price per firm, in firm order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Self {
        PriceVector(prices)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every entry lies in `[0, theta_hi * v_n]`.
    pub fn within_bounds(&self, market: &Market) -> bool {
        let hi = market.max_price();
        self.0.iter().all(|&p| (0.0..=hi).contains(&p))
    }
}

impl std::ops::Index<usize> for PriceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for PriceVector {
    fn from(v: Vec<f64>) -> Self {
        PriceVector(v)
    }
}

/// Common discount factor, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(DiscountFactor(value))
        } else {
            Err(ModelError::InvalidDiscountFactor(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}
