//! Duopoly under a two-step uniform taste distribution.
//!
//! Mass `s_mass` is spread evenly on `[theta_lo, theta_tilde]` and the
//! remaining `1 - s_mass` on `[theta_tilde, theta_hi]`. As long as the
//! marginal consumer stays in the lower step, both firms face demand with the
//! same slope `K = s_mass / ((v_2 - v_1)(theta_tilde - theta_lo))`, so profits
//! reduce to `K m_i^2` and the covered-market critical factor carries over.
//! Demand is measured as probability mass.

use serde::{Deserialize, Serialize};

use crate::choice::TasteMeasure;
use crate::collusion::{critical_delta_closed_form, PayoffTriple, P1C_SLACK};
use crate::equilibrium::NashSolution;
use crate::error::{ModelError, Result};
use crate::market::PriceVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStepParams {
    pub v: [f64; 2],
    pub c: [f64; 2],
    pub theta_lo: f64,
    pub theta_tilde: f64,
    pub theta_hi: f64,
    /// Probability mass on the lower step.
    pub s_mass: f64,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonpositiveParameter {
            name: name.into(),
            value,
        })
    }
}

impl TwoStepParams {
    pub fn validate(&self) -> Result<()> {
        positive("v[0]", self.v[0])?;
        positive("v[1]", self.v[1])?;
        positive("c[0]", self.c[0])?;
        positive("c[1]", self.c[1])?;
        positive("theta_lo", self.theta_lo)?;
        positive("theta_tilde", self.theta_tilde)?;
        positive("theta_hi", self.theta_hi)?;
        if self.theta_lo >= self.theta_tilde {
            return Err(ModelError::IntervalViolation {
                theta_lo: self.theta_lo,
                theta_hi: self.theta_tilde,
            });
        }
        if self.theta_tilde >= self.theta_hi {
            return Err(ModelError::IntervalViolation {
                theta_lo: self.theta_tilde,
                theta_hi: self.theta_hi,
            });
        }
        if self.v[1] <= self.v[0] {
            return Err(ModelError::QualityOrderViolation {
                index: 1,
                value: self.v[1],
                prev_value: self.v[0],
            });
        }
        if self.c[1] < self.c[0] {
            return Err(ModelError::CostOrderViolation {
                index: 1,
                value: self.c[1],
                prev_value: self.c[0],
            });
        }
        let s = self.s_mass;
        if !(s > 0.0 && s < 1.0) || s == 0.5 {
            return Err(ModelError::InvalidMass(s));
        }
        Ok(())
    }

    /// Mass equivalent to a plain uniform distribution on `[theta_lo, theta_hi]`.
    pub fn uniform_mass(theta_lo: f64, theta_tilde: f64, theta_hi: f64) -> f64 {
        (theta_tilde - theta_lo) / (theta_hi - theta_lo)
    }

    fn dv(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    /// Common demand slope `K` in the lower step.
    pub fn profit_weight(&self) -> f64 {
        self.s_mass / (self.dv() * (self.theta_tilde - self.theta_lo))
    }

    pub fn measure(&self) -> TwoStepMeasure {
        TwoStepMeasure(*self)
    }

    /// Marginal consumer `(p_2 - p_1) / (v_2 - v_1)`.
    pub fn threshold(&self, prices: [f64; 2]) -> f64 {
        (prices[1] - prices[0]) / self.dv()
    }

    /// Closed-form demands with the marginal consumer in the lower step.
    pub fn demands(&self, prices: [f64; 2]) -> [f64; 2] {
        let low = self.s_mass * (self.threshold(prices) - self.theta_lo)
            / (self.theta_tilde - self.theta_lo);
        [low, 1.0 - low]
    }

    pub fn profits(&self, prices: [f64; 2]) -> [f64; 2] {
        let d = self.demands(prices);
        [
            (prices[0] - self.c[0]) * d[0],
            (prices[1] - self.c[1]) * d[1],
        ]
    }

    /// Checks `theta_lo <= theta_1 <= theta_tilde` and bottom coverage at `prices`.
    fn check_premise(&self, prices: [f64; 2], label: &str) -> Result<()> {
        let t = self.threshold(prices);
        if t > self.theta_tilde {
            return Err(ModelError::ThresholdViolated(format!(
                "{label}: theta_1={t} exceeds theta_tilde={}",
                self.theta_tilde
            )));
        }
        if t < self.theta_lo {
            return Err(ModelError::ThresholdViolated(format!(
                "{label}: theta_1={t} below theta_lo={}",
                self.theta_lo
            )));
        }
        Ok(())
    }
}

/// Cumulative mass of the two-step distribution.
#[derive(Debug, Clone, Copy)]
pub struct TwoStepMeasure(TwoStepParams);

impl TasteMeasure for TwoStepMeasure {
    fn support(&self) -> (f64, f64) {
        (self.0.theta_lo, self.0.theta_hi)
    }

    fn mass_below(&self, theta: f64) -> f64 {
        let p = &self.0;
        let t = theta.clamp(p.theta_lo, p.theta_hi);
        if t <= p.theta_tilde {
            p.s_mass * (t - p.theta_lo) / (p.theta_tilde - p.theta_lo)
        } else {
            p.s_mass + (1.0 - p.s_mass) * (t - p.theta_tilde) / (p.theta_hi - p.theta_tilde)
        }
    }
}

/// Lower-step best responses: `(p_2 - dv theta_lo + c_1) / 2` for the bottom
/// firm and `(dv (theta_tilde - theta_lo (1 - s)) + s p_1 + s c_2) / (2 s)`
/// for the top firm.
pub fn twostep_best_response(params: &TwoStepParams, i: usize, other: f64) -> Result<f64> {
    let dv = params.dv();
    let s = params.s_mass;
    match i {
        0 => Ok(0.5 * (other - dv * params.theta_lo + params.c[0])),
        1 => Ok((dv * (params.theta_tilde - params.theta_lo * (1.0 - s))
            + s * other
            + s * params.c[1])
            / (2.0 * s)),
        _ => Err(ModelError::IndexOutOfRange { index: i, limit: 2 }),
    }
}

/// Equilibrium prices
///
/// ```text
/// p_1* = (dv (theta_tilde - theta_lo (1 + s)) + 2 s c_1 + s c_2) / (3 s)
/// p_2* = (dv (2 (theta_tilde - theta_lo) + theta_lo s) + 2 s c_2 + s c_1) / (3 s)
/// ```
///
/// with profits `K m_i^2`. Shares are probability masses.
pub fn twostep_nash(params: &TwoStepParams) -> Result<NashSolution> {
    params.validate()?;
    let (dv, s) = (params.dv(), params.s_mass);
    let (lo, tilde) = (params.theta_lo, params.theta_tilde);
    let [c1, c2] = params.c;
    let p1 = (dv * (tilde - lo * (1.0 + s)) + 2.0 * s * c1 + s * c2) / (3.0 * s);
    let p2 = (dv * (2.0 * (tilde - lo) + lo * s) + 2.0 * s * c2 + s * c1) / (3.0 * s);
    let prices = [p1, p2];
    params.check_premise(prices, "equilibrium")?;
    if p1 > lo * params.v[0] {
        return Err(ModelError::H1Failed(format!(
            "theta_lo={lo} > p_1/v_1={}",
            p1 / params.v[0]
        )));
    }
    let margins = vec![p1 - c1, p2 - c2];
    if margins.iter().any(|&m| m < 0.0) {
        return Err(ModelError::H1Failed(format!(
            "negative margin in {margins:?}"
        )));
    }
    let k = params.profit_weight();
    Ok(NashSolution {
        prices: PriceVector::new(prices.to_vec()),
        thetas: vec![params.threshold(prices)],
        shares: params.demands(prices).to_vec(),
        profits: margins.iter().map(|m| k * m * m).collect(),
        margins,
        iterations: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepCollusion {
    pub p1c: f64,
    pub delta_p: f64,
    pub collusive_prices: PriceVector,
    pub deviation_prices: PriceVector,
    /// Payoffs evaluated from the lower-step demand functions.
    pub payoff_triples: Vec<PayoffTriple>,
    /// Closed form `(dp/4) / (dp/4 + m_i)`.
    pub critical_deltas: Vec<f64>,
}

/// Uniform uplift `dp = p1c - p_1*` with every premise checked at the
/// collusive and both deviation price pairs.
pub fn twostep_collusion(params: &TwoStepParams, p1c: f64) -> Result<TwoStepCollusion> {
    let nash = twostep_nash(params)?;
    let p_star = [nash.prices[0], nash.prices[1]];
    let hi = params.theta_lo * params.v[0];
    let lo = p_star[0];
    let below = p1c < lo - P1C_SLACK * lo.abs().max(1.0);
    let above = p1c > hi + P1C_SLACK * hi.abs().max(1.0);
    if !p1c.is_finite() || below || above {
        return Err(ModelError::P1cOutOfRange { p1c, lo, hi });
    }
    let dp = (p1c - lo).max(0.0);
    let collusive = [p_star[0] + dp, p_star[1] + dp];
    params.check_premise(collusive, "collusion")?;
    let deviation = [
        twostep_best_response(params, 0, collusive[1])?,
        twostep_best_response(params, 1, collusive[0])?,
    ];
    params.check_premise([deviation[0], collusive[1]], "bottom deviation")?;
    params.check_premise([collusive[0], deviation[1]], "top deviation")?;

    let nash_profits = params.profits(p_star);
    let collusive_profits = params.profits(collusive);
    let payoff_triples = vec![
        PayoffTriple {
            collusive: collusive_profits[0],
            deviation: params.profits([deviation[0], collusive[1]])[0],
            nash: nash_profits[0],
        },
        PayoffTriple {
            collusive: collusive_profits[1],
            deviation: params.profits([collusive[0], deviation[1]])[1],
            nash: nash_profits[1],
        },
    ];
    let critical_deltas = nash
        .margins
        .iter()
        .map(|&m| critical_delta_closed_form(dp, m))
        .collect();
    Ok(TwoStepCollusion {
        p1c: collusive[0],
        delta_p: dp,
        collusive_prices: PriceVector::new(collusive.to_vec()),
        deviation_prices: PriceVector::new(deviation.to_vec()),
        payoff_triples,
        critical_deltas,
    })
}

pub fn twostep_critical_deltas(params: &TwoStepParams, p1c: f64) -> Result<[f64; 2]> {
    let c = twostep_collusion(params, p1c)?;
    Ok([c.critical_deltas[0], c.critical_deltas[1]])
}
