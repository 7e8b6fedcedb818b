//! Variant with surplus `v_i (theta - p_i)`.
//!
//! Marginal consumers are `theta_i = (v_{i+1} p_{i+1} - v_i p_i) / (v_{i+1} - v_i)`,
//! which is the covered-market threshold in the variable `u_i = v_i p_i`.
//! Since `pi_i = (u_i - v_i c_i) D_i / v_i`, the equilibrium in `u` is the
//! covered-market equilibrium with costs `v_i c_i`. The first-order system is
//! solved there and mapped back with `p_i = u_i / v_i`.

use serde::Serialize;

use crate::collusion::{
    critical_delta_closed_form, CollusionReport, OrderWitness, PayoffTriple, MARGIN_TIE, P1C_SLACK,
};
use crate::equilibrium::{check_chain, foc_system, H1Report, NashSolution};
use crate::error::{ModelError, Result};
use crate::market::{shares_from_thresholds, Market, PriceVector};

/// Market read under quality-scaled utility. Parameters and their
/// invariants are those of [`Market`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HacknerMarket {
    market: Market,
    #[serde(skip)]
    scaled: Market,
}

impl HacknerMarket {
    pub fn new(market: Market) -> Result<Self> {
        let scaled_costs = market
            .qualities()
            .iter()
            .zip(market.costs())
            .map(|(v, c)| v * c)
            .collect();
        let scaled = Market::new(
            market.qualities().to_vec(),
            scaled_costs,
            market.theta_lo(),
            market.theta_hi(),
        )?;
        Ok(HacknerMarket { market, scaled })
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn n(&self) -> usize {
        self.market.n()
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

    pub fn thresholds(&self, prices: &[f64]) -> Result<Vec<f64>> {
        self.check_prices(prices)?;
        let v = self.market.qualities();
        Ok((0..self.n() - 1)
            .map(|k| (v[k + 1] * prices[k + 1] - v[k] * prices[k]) / (v[k + 1] - v[k]))
            .collect())
    }

    pub fn shares(&self, prices: &[f64]) -> Result<Vec<f64>> {
        let t = self.thresholds(prices)?;
        Ok(shares_from_thresholds(
            &t,
            self.market.theta_lo(),
            self.market.theta_hi(),
        ))
    }

    pub fn profits(&self, prices: &[f64]) -> Result<Vec<f64>> {
        let shares = self.shares(prices)?;
        Ok(prices
            .iter()
            .zip(self.market.costs())
            .zip(shares)
            .map(|((p, c), s)| (p - c) * s)
            .collect())
    }

    /// `v_i K_i`, so that equilibrium profit is `v_i K_i m_i^2`.
    pub fn profit_weight(&self, i: usize) -> f64 {
        self.market.qualities()[i] * self.market.profit_weight(i)
    }
}

/// Best response in price space:
///
/// ```text
/// bottom:       (v_2 p_2 + v_1 c_1 - theta_lo (v_2 - v_1)) / (2 v_1)
/// intermediate: [v_{i+1}(v_i - v_{i-1}) p_{i+1} + v_{i-1}(v_{i+1} - v_i) p_{i-1}
///                + v_i (v_{i+1} - v_{i-1}) c_i] / [2 v_i (v_{i+1} - v_{i-1})]
/// top:          (theta_hi (v_n - v_{n-1}) + v_{n-1} p_{n-1} + v_n c_n) / (2 v_n)
/// ```
pub fn hackner_best_response(hm: &HacknerMarket, i: usize, neighbors: &[f64]) -> Result<f64> {
    let n = hm.n();
    if i >= n {
        return Err(ModelError::IndexOutOfRange { index: i, limit: n });
    }
    let expected = if i == 0 || i == n - 1 { 1 } else { 2 };
    if neighbors.len() != expected {
        return Err(ModelError::WrongNeighborArity {
            firm: i,
            expected,
            got: neighbors.len(),
        });
    }
    let m = hm.market();
    let (v, c) = (m.qualities(), m.costs());
    Ok(if i == 0 {
        (v[1] * neighbors[0] + v[0] * c[0] - m.theta_lo() * (v[1] - v[0])) / (2.0 * v[0])
    } else if i == n - 1 {
        (m.theta_hi() * (v[i] - v[i - 1]) + v[i - 1] * neighbors[0] + v[i] * c[i]) / (2.0 * v[i])
    } else {
        let (below, above) = (neighbors[0], neighbors[1]);
        (v[i + 1] * (v[i] - v[i - 1]) * above
            + v[i - 1] * (v[i + 1] - v[i]) * below
            + v[i] * (v[i + 1] - v[i - 1]) * c[i])
            / (2.0 * v[i] * (v[i + 1] - v[i - 1]))
    })
}

/// Best response of firm `i` with rivals at `prices`.
pub fn hackner_best_response_in(hm: &HacknerMarket, prices: &[f64], i: usize) -> Result<f64> {
    hm.check_prices(prices)?;
    let n = hm.n();
    if i >= n {
        return Err(ModelError::IndexOutOfRange { index: i, limit: n });
    }
    if i == 0 {
        hackner_best_response(hm, 0, &prices[1..2])
    } else if i == n - 1 {
        hackner_best_response(hm, i, &prices[i - 1..i])
    } else {
        hackner_best_response(hm, i, &[prices[i - 1], prices[i + 1]])
    }
}

fn solution_from_prices(hm: &HacknerMarket, prices: Vec<f64>) -> Result<NashSolution> {
    let thetas = hm.thresholds(&prices)?;
    let shares = hm.shares(&prices)?;
    let margins: Vec<f64> = prices
        .iter()
        .zip(hm.market().costs())
        .map(|(p, c)| p - c)
        .collect();
    let profits = margins.iter().zip(&shares).map(|(m, s)| m * s).collect();
    Ok(NashSolution {
        prices: PriceVector::new(prices),
        thetas,
        shares,
        margins,
        profits,
        iterations: 0,
    })
}

/// Equilibrium without the interiority/coverage check.
pub fn hackner_equilibrium(hm: &HacknerMarket) -> Result<NashSolution> {
    let u = foc_system(&hm.scaled).solve()?;
    let prices = u
        .iter()
        .zip(hm.market().qualities())
        .map(|(u, v)| u / v)
        .collect();
    solution_from_prices(hm, prices)
}

/// Interiority and coverage: `theta_hi > theta_{n-1} > ... > theta_1 > theta_lo > p_1 > 0`
/// with nonnegative margins. The lowest taste buys iff `theta_lo >= p_1`.
pub fn hackner_h1(hm: &HacknerMarket, nash: &NashSolution) -> H1Report {
    check_chain(
        &nash.thetas,
        hm.market().theta_lo(),
        hm.market().theta_hi(),
        nash.prices[0],
        &nash.margins,
    )
}

pub fn hackner_nash(hm: &HacknerMarket) -> Result<NashSolution> {
    let nash = hackner_equilibrium(hm)?;
    hackner_h1(hm, &nash).into_result()?;
    Ok(nash)
}

/// Coverage cap on the bottom cartel price: `theta_lo`.
pub fn hackner_max_collusive_bottom_price(hm: &HacknerMarket) -> f64 {
    hm.market().theta_lo()
}

/// `(dp v_1 / 4) / (dp v_1 / 4 + v_i m_i)`, 0 at zero uplift.
pub fn hackner_critical_delta(v1: f64, vi: f64, delta_p: f64, margin: f64) -> f64 {
    critical_delta_closed_form(v1 * delta_p, vi * margin)
}

/// Quality-scaled uplift `p_i^c = p_i* + (v_1 / v_i) dp`, deviation prices
/// from the best responses, and the binding firm as the largest critical
/// factor (ties to the lowest index).
pub fn hackner_collusion(
    hm: &HacknerMarket,
    nash: &NashSolution,
    p1c: f64,
) -> Result<CollusionReport> {
    hackner_h1(hm, nash).into_result()?;
    let lo = nash.prices[0];
    let hi = hackner_max_collusive_bottom_price(hm);
    let below = p1c < lo - P1C_SLACK * lo.abs().max(1.0);
    let above = p1c > hi + P1C_SLACK * hi.abs().max(1.0);
    if !p1c.is_finite() || below || above {
        return Err(ModelError::P1cOutOfRange { p1c, lo, hi });
    }
    let dp = (p1c - lo).max(0.0);
    let n = hm.n();
    let v = hm.market().qualities();
    let collusive: Vec<f64> = (0..n).map(|i| nash.prices[i] + v[0] / v[i] * dp).collect();
    let deviation = (0..n)
        .map(|i| hackner_best_response_in(hm, &collusive, i))
        .collect::<Result<Vec<_>>>()?;
    let payoff_triples = (0..n)
        .map(|i| {
            let k = hm.profit_weight(i);
            let c = hm.market().costs()[i];
            let m = nash.margins[i];
            PayoffTriple {
                collusive: (collusive[i] - c) * m * k,
                deviation: (deviation[i] - c).powi(2) * k,
                nash: m * m * k,
            }
        })
        .collect();
    let critical_deltas: Vec<f64> = (0..n)
        .map(|i| hackner_critical_delta(v[0], v[i], dp, nash.margins[i]))
        .collect();
    let binding_firm = (dp > 0.0).then(|| {
        let scale = critical_deltas.iter().fold(0.0f64, |a, d| a.max(*d));
        let mut best = 0;
        for (i, &d) in critical_deltas.iter().enumerate().skip(1) {
            if d > critical_deltas[best] + 1e-12 * scale {
                best = i;
            }
        }
        best
    });
    Ok(CollusionReport {
        p1c: collusive[0],
        delta_p: dp,
        collusive_prices: collusive.into(),
        deviation_prices: deviation.into(),
        payoff_triples,
        critical_deltas,
        binding_firm,
    })
}

/// Payoffs evaluated from the demand intervals the prices induce.
pub fn hackner_payoffs_direct(
    hm: &HacknerMarket,
    nash: &NashSolution,
    report: &CollusionReport,
    i: usize,
) -> Result<PayoffTriple> {
    let collusive = report.collusive_prices.as_slice();
    let mut deviating = collusive.to_vec();
    deviating[i] = report.deviation_prices[i];
    Ok(PayoffTriple {
        collusive: hm.profits(collusive)?[i],
        deviation: hm.profits(&deviating)?[i],
        nash: hm.profits(nash.prices.as_slice())?[i],
    })
}

/// First pair where the larger margin comes with the larger critical factor.
pub fn margin_order_reversal(
    nash: &NashSolution,
    report: &CollusionReport,
) -> Option<OrderWitness> {
    let m = &nash.margins;
    let d = &report.critical_deltas;
    for i in 0..m.len() {
        for j in 0..m.len() {
            if i != j && m[i] > m[j] + MARGIN_TIE && d[i] > d[j] {
                return Some(OrderWitness {
                    higher: i,
                    lower: j,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{self, UnitDensity, Utility};
    use crate::numerics::golden_section_max;

    fn duopoly() -> HacknerMarket {
        HacknerMarket::new(Market::new(vec![1.0, 2.0], vec![0.5, 1.0], 1.0, 2.0).unwrap()).unwrap()
    }

    fn three() -> HacknerMarket {
        HacknerMarket::new(Market::new(vec![1.0, 1.5, 2.4], vec![0.1, 0.3, 0.4], 0.8, 3.0).unwrap())
            .unwrap()
    }

    #[test]
    fn duopoly_prices_by_hand() {
        // In u: 2 u_1 - u_2 = c~_1 - theta_lo dv and 2 u_2 - u_1 = c~_2 + theta_hi dv
        // with c~ = (0.5, 2), so u = (1, 2.5) and p = (1, 1.25).
        let hm = duopoly();
        let n = hackner_equilibrium(&hm).unwrap();
        assert!((n.prices[0] - 1.0).abs() < 1e-14);
        assert!((n.prices[1] - 1.25).abs() < 1e-14);
        // p_1 = theta_lo: the lowest taste is exactly indifferent, so coverage fails strictly.
        assert!(matches!(hackner_nash(&hm), Err(ModelError::H1Failed(_))));
    }

    #[test]
    fn fixed_point_of_price_space_best_responses() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        for i in 0..3 {
            let br = hackner_best_response_in(&hm, n.prices.as_slice(), i).unwrap();
            assert!((br - n.prices[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn profit_identity() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        for i in 0..3 {
            let closed = hm.profit_weight(i) * n.margins[i] * n.margins[i];
            assert!((closed - n.profits[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn consumer_choice_deviations_do_not_pay() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        let m = hm.market();
        let density = UnitDensity {
            lo: m.theta_lo(),
            hi: m.theta_hi(),
        };
        for i in 0..3 {
            let f = |x: f64| {
                let mut t = n.prices.as_slice().to_vec();
                t[i] = x;
                let c = m.costs()[i];
                choice::profit(
                    m.qualities(),
                    &t,
                    c,
                    i,
                    Utility::QualityScaled,
                    &density,
                    false,
                )
            };
            let best = golden_section_max(m.costs()[i], m.theta_hi(), 1e-12, f);
            assert!((best - n.prices[i]).abs() < 1e-6, "firm {i}: {best}");
        }
    }

    #[test]
    fn collusion_matches_closed_forms() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        let p1c = 0.5 * (n.prices[0] + hackner_max_collusive_bottom_price(&hm));
        let rep = hackner_collusion(&hm, &n, p1c).unwrap();
        let v = hm.market().qualities();
        for i in 0..3 {
            let dev = n.prices[i] + 0.5 * v[0] / v[i] * rep.delta_p;
            assert!((rep.deviation_prices[i] - dev).abs() < 1e-12);
            let direct = hackner_payoffs_direct(&hm, &n, &rep, i).unwrap();
            assert!((direct.ratio() - rep.critical_deltas[i]).abs() < 1e-10);
            assert!((rep.payoff_triples[i].ratio() - rep.critical_deltas[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_uplift_gives_nash_prices() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        let rep = hackner_collusion(&hm, &n, n.prices[0]).unwrap();
        assert_eq!(rep.binding_firm, None);
        assert!(rep.critical_deltas.iter().all(|&d| d == 0.0));
        assert_eq!(rep.collusive_prices, n.prices);
    }

    #[test]
    fn cap_is_theta_lo() {
        let hm = three();
        let n = hackner_nash(&hm).unwrap();
        assert!(hackner_collusion(&hm, &n, 0.8).is_ok());
        assert!(matches!(
            hackner_collusion(&hm, &n, 0.81),
            Err(ModelError::P1cOutOfRange { .. })
        ));
    }
}
