//! Fixed-market-share cartel under grim-trigger punishment.
//!
//! The cartel raises every price by the bottom firm's uplift
//! `dp = p1c - p_1*`, which leaves every marginal consumer where it was in the
//! static equilibrium. A firm deviating unilaterally best-responds to its
//! neighbours' collusive prices and is punished by Nash reversion forever.
//!
//! For every firm the payoffs collapse onto its equilibrium margin `m_i`:
//!
//! ```text
//! pi_d - pi_c = K_i * dp^2 / 4
//! pi_d - pi*  = K_i * dp * (dp/4 + m_i)
//! delta_i     = (dp/4) / (dp/4 + m_i)
//! ```
//!
//! so the firm with the smallest margin has the tightest constraint.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    best_response_in, check_h1, h1_holds_weakly, solve_nash_direct, NashSolution,
};
use crate::error::{ModelError, Result};
use crate::market::{DiscountFactor, Market, MarketParams, PriceVector};
use crate::numerics::bisect_last_true;

/// Relative slack accepted on the admissible `p1c` interval, so that bounds
/// recomputed in floating point (e.g. `p1c = p_1*`) are not rejected.
pub const P1C_SLACK: f64 = 1e-12;

/// Tolerance used when comparing margins for strict ordering.
pub const MARGIN_TIE: f64 = 1e-12;

/// Upper end of the covered-market range: the lowest taste still buys.
pub fn max_collusive_bottom_price(market: &Market) -> f64 {
    market.theta_lo() * market.qualities()[0]
}

/// Per-firm payoffs: colluding, deviating once, and static Nash.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffTriple {
    pub collusive: f64,
    pub deviation: f64,
    pub nash: f64,
}

impl PayoffTriple {
    /// `pi_c - (1 - delta) pi_d - delta pi*`.
    pub fn icc(&self, delta: f64) -> f64 {
        self.collusive - (1.0 - delta) * self.deviation - delta * self.nash
    }

    /// `(pi_d - pi_c) / (pi_d - pi*)`.
    pub fn ratio(&self) -> f64 {
        (self.deviation - self.collusive) / (self.deviation - self.nash)
    }
}

/// Incentive-compatibility value `Omega_i`; nonnegative when firm `i` keeps colluding.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OmegaValue(pub f64);

impl OmegaValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_sustainable(self) -> bool {
        self.0 >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollusionReport {
    pub p1c: f64,
    pub delta_p: f64,
    pub collusive_prices: PriceVector,
    pub deviation_prices: PriceVector,
    pub payoff_triples: Vec<PayoffTriple>,
    pub critical_deltas: Vec<f64>,
    /// `None` at zero uplift, where every critical factor is 0.
    pub binding_firm: Option<usize>,
}

impl CollusionReport {
    pub fn max_critical_delta(&self) -> f64 {
        self.critical_deltas.iter().copied().fold(0.0, f64::max)
    }

    pub fn sustainable_at(&self, delta: f64) -> bool {
        self.critical_deltas.iter().all(|&d| d <= delta)
    }
}

/// `(dp/4) / (dp/4 + margin)`, with the zero-uplift limit defined as 0.
pub fn critical_delta_closed_form(delta_p: f64, margin: f64) -> f64 {
    if delta_p == 0.0 {
        return 0.0;
    }
    let q = 0.25 * delta_p;
    q / (q + margin)
}

/// Firm pair violating an ordering claim: `higher` has the strictly larger margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub higher: usize,
    pub lower: usize,
}

/// Pairwise ordering checks for "larger margin, looser constraint".
///
/// `omega` compares the raw `Omega_i`; `scaled_omega` compares `Omega_i / K_i`
/// (the constraint per unit of demand slope, the quantity whose sign and
/// ordering follow from the margin alone); `delta` compares critical factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposition1Check {
    pub omega: Option<OrderWitness>,
    pub scaled_omega: Option<OrderWitness>,
    pub delta: Option<OrderWitness>,
    pub omegas: Vec<f64>,
    pub critical_deltas: Vec<f64>,
}

impl Proposition1Check {
    /// Every claim holds: raw and scaled `Omega` ordering and reversed critical factors.
    pub fn holds(&self) -> bool {
        self.omega.is_none() && self.scaled_omega.is_none() && self.delta.is_none()
    }

    /// The incentive-ordering content: scaled `Omega` and critical factors.
    pub fn incentive_order_holds(&self) -> bool {
        self.scaled_omega.is_none() && self.delta.is_none()
    }
}

/// Collusion analysis bound to a market and its equilibrium.
///
/// Construction fails when the equilibrium violates the interiority/coverage
/// chain, since every formula below assumes it.
#[derive(Debug, Clone, Copy)]
pub struct Cartel<'a> {
    market: &'a Market,
    nash: &'a NashSolution,
}

impl<'a> Cartel<'a> {
    pub fn new(market: &'a Market, nash: &'a NashSolution) -> Result<Self> {
        check_h1(market, nash).into_result()?;
        Ok(Cartel { market, nash })
    }

    pub fn market(&self) -> &Market {
        self.market
    }

    pub fn nash(&self) -> &NashSolution {
        self.nash
    }

    fn check_firm(&self, i: usize) -> Result<()> {
        let n = self.market.n();
        if i >= n {
            return Err(ModelError::IndexOutOfRange { index: i, limit: n });
        }
        Ok(())
    }

    /// Validates `p1c` against `[p_1*, theta_lo v_1]` and returns the uplift.
    pub fn uplift(&self, p1c: f64) -> Result<f64> {
        let lo = self.nash.prices[0];
        let hi = max_collusive_bottom_price(self.market);
        let below = p1c < lo - P1C_SLACK * lo.abs().max(1.0);
        let above = p1c > hi + P1C_SLACK * hi.abs().max(1.0);
        if !p1c.is_finite() || below || above {
            return Err(ModelError::P1cOutOfRange { p1c, lo, hi });
        }
        Ok((p1c - lo).max(0.0))
    }

    /// `p_i^c = p_i* + dp` for every firm.
    pub fn collusive_prices(&self, p1c: f64) -> Result<PriceVector> {
        let dp = self.uplift(p1c)?;
        Ok(self
            .nash
            .prices
            .as_slice()
            .iter()
            .map(|p| p + dp)
            .collect::<Vec<_>>()
            .into())
    }

    /// Best response of firm `i` while every rival holds its collusive price.
    pub fn deviation_price(&self, collusive: &PriceVector, i: usize) -> Result<f64> {
        self.check_firm(i)?;
        best_response_in(self.market, collusive.as_slice(), i)
    }

    /// Closed-form payoffs `(m_i + dp) m_i K_i`, `(p_i^d - c_i)^2 K_i`, `m_i^2 K_i`.
    pub fn payoff_triple(&self, p1c: f64, i: usize) -> Result<PayoffTriple> {
        self.check_firm(i)?;
        let collusive = self.collusive_prices(p1c)?;
        let deviation = self.deviation_price(&collusive, i)?;
        let k = self.market.profit_weight(i);
        let c = self.market.costs()[i];
        let m = self.nash.margins[i];
        Ok(PayoffTriple {
            collusive: (collusive[i] - c) * m * k,
            deviation: (deviation - c).powi(2) * k,
            nash: m * m * k,
        })
    }

    /// Payoffs evaluated from the demand intervals the prices induce.
    pub fn payoff_triple_direct(&self, p1c: f64, i: usize) -> Result<PayoffTriple> {
        self.check_firm(i)?;
        let collusive = self.collusive_prices(p1c)?;
        let mut deviating = collusive.clone().into_inner();
        deviating[i] = self.deviation_price(&collusive, i)?;
        Ok(PayoffTriple {
            collusive: self.market.profits(collusive.as_slice())?[i],
            deviation: self.market.profits(&deviating)?[i],
            nash: self.market.profits(self.nash.prices.as_slice())?[i],
        })
    }

    pub fn icc_value(&self, p1c: f64, delta: DiscountFactor, i: usize) -> Result<OmegaValue> {
        Ok(OmegaValue(self.payoff_triple(p1c, i)?.icc(delta.value())))
    }

    /// `(dp/4) / (dp/4 + m_i)`; 0 at zero uplift.
    pub fn critical_discount_factor(&self, p1c: f64, i: usize) -> Result<f64> {
        self.check_firm(i)?;
        let dp = self.uplift(p1c)?;
        Ok(critical_delta_closed_form(dp, self.nash.margins[i]))
    }

    /// `(pi_d - pi_c) / (pi_d - pi*)` from the payoff triple.
    pub fn critical_discount_factor_ratio(&self, p1c: f64, i: usize) -> Result<f64> {
        if self.uplift(p1c)? == 0.0 {
            return Err(ModelError::ZeroUplift);
        }
        Ok(self.payoff_triple(p1c, i)?.ratio())
    }

    /// Firm with the largest critical factor (smallest margin), ties to the lowest index.
    pub fn binding_firm(&self, p1c: f64) -> Result<usize> {
        if self.uplift(p1c)? == 0.0 {
            return Err(ModelError::ZeroUplift);
        }
        Ok(self.nash.min_margin_firm())
    }

    /// Largest `p1c` for which every constraint holds at `delta`:
    /// `min(theta_lo v_1, p_1* + 4 delta m_min / (1 - delta))`.
    pub fn max_sustainable_p1c(&self, delta: DiscountFactor) -> f64 {
        let d = delta.value();
        let m_min = self.nash.margins[self.nash.min_margin_firm()];
        let uncapped = self.nash.prices[0] + 4.0 * d * m_min / (1.0 - d);
        uncapped.min(max_collusive_bottom_price(self.market))
    }

    /// Same quantity found by bisection on the binding firm's `Omega`, which is
    /// concave in the cartel price and zero at the Nash price.
    pub fn max_sustainable_p1c_bisection(&self, delta: DiscountFactor) -> f64 {
        let lo = self.nash.prices[0];
        let hi = max_collusive_bottom_price(self.market);
        let firm = self.nash.min_margin_firm();
        bisect_last_true(lo, hi, 1e-14, |p1c| {
            self.icc_value(p1c, delta, firm)
                .map(|o| o.is_sustainable())
                .unwrap_or(false)
        })
    }

    pub fn report(&self, p1c: f64) -> Result<CollusionReport> {
        let dp = self.uplift(p1c)?;
        let collusive = self.collusive_prices(p1c)?;
        let n = self.market.n();
        let deviation = (0..n)
            .map(|i| self.deviation_price(&collusive, i))
            .collect::<Result<Vec<_>>>()?;
        let payoff_triples = (0..n)
            .map(|i| self.payoff_triple(p1c, i))
            .collect::<Result<Vec<_>>>()?;
        let critical_deltas = self
            .nash
            .margins
            .iter()
            .map(|&m| critical_delta_closed_form(dp, m))
            .collect();
        let binding_firm = (dp > 0.0).then(|| self.nash.min_margin_firm());
        Ok(CollusionReport {
            p1c: collusive[0],
            delta_p: dp,
            collusive_prices: collusive,
            deviation_prices: deviation.into(),
            payoff_triples,
            critical_deltas,
            binding_firm,
        })
    }

    /// Checks, for every pair with `m_i > m_j`, that firm `i` has the looser
    /// constraint. Records the first offending pair per claim.
    pub fn verify_proposition1(
        &self,
        p1c: f64,
        delta: DiscountFactor,
    ) -> Result<Proposition1Check> {
        let dp = self.uplift(p1c)?;
        if dp == 0.0 {
            return Err(ModelError::ZeroUplift);
        }
        let n = self.market.n();
        let omegas = (0..n)
            .map(|i| self.icc_value(p1c, delta, i).map(OmegaValue::value))
            .collect::<Result<Vec<_>>>()?;
        let scaled: Vec<f64> = (0..n)
            .map(|i| omegas[i] / self.market.profit_weight(i))
            .collect();
        let deltas: Vec<f64> = self
            .nash
            .margins
            .iter()
            .map(|&m| critical_delta_closed_form(dp, m))
            .collect();
        let margins = &self.nash.margins;

        let mut check = Proposition1Check {
            omega: None,
            scaled_omega: None,
            delta: None,
            omegas: omegas.clone(),
            critical_deltas: deltas.clone(),
        };
        for i in 0..n {
            for j in 0..n {
                if i == j || !(margins[i] > margins[j] + MARGIN_TIE) {
                    continue;
                }
                let w = OrderWitness {
                    higher: i,
                    lower: j,
                };
                if check.omega.is_none() && !(omegas[i] > omegas[j]) {
                    check.omega = Some(w);
                }
                if check.scaled_omega.is_none() && !(scaled[i] > scaled[j]) {
                    check.scaled_omega = Some(w);
                }
                if check.delta.is_none() && !(deltas[i] < deltas[j]) {
                    check.delta = Some(w);
                }
            }
        }
        Ok(check)
    }
}

/// Why the corollary threshold search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdLimit {
    /// Past the threshold another firm has the smallest margin.
    BindingSwitch,
    /// Past the threshold the equilibrium leaves the interior/covered region.
    H1Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryThreshold {
    /// Largest uniform cost step `g` (costs `c + g (i - 1)`) keeping firm 1 binding.
    pub mu_hat: f64,
    pub limited_by: ThresholdLimit,
    pub baseline_margins: Vec<f64>,
}

/// Market with costs `base + g * i` on the given qualities and taste interval.
pub fn cost_gap_market(
    qualities: &[f64],
    theta_lo: f64,
    theta_hi: f64,
    base_cost: f64,
    gap: f64,
) -> Result<Market> {
    Market::new(
        qualities.to_vec(),
        (0..qualities.len())
            .map(|i| base_cost + gap * i as f64)
            .collect(),
        theta_lo,
        theta_hi,
    )
}

/// Status of the cost-gap market at `gap`: `Ok(true)` when the equilibrium
/// passes the interiority/coverage chain and firm 1 has the smallest margin.
fn bottom_binding_at(
    qualities: &[f64],
    theta_lo: f64,
    theta_hi: f64,
    base_cost: f64,
    gap: f64,
) -> (bool, bool) {
    let Ok(market) = cost_gap_market(qualities, theta_lo, theta_hi, base_cost, gap) else {
        return (false, false);
    };
    let Ok(nash) = solve_nash_direct(&market) else {
        return (false, false);
    };
    let h1 = check_h1(&market, &nash).passes();
    (h1, h1 && nash.min_margin_firm() == 0)
}

/// Empirical threshold for the corollary: bisects on the uniform cost step
/// for the largest value at which firm 1 is still the binding firm.
///
/// `market.costs` is ignored; costs are `base_cost + g * i`. The equal-cost
/// baseline is checked with the non-strict chain (slack `1e-12` times the
/// price scale) since it may sit exactly on the interior boundary; every
/// `g > 0` probe uses the strict chain.
pub fn verify_corollary(market: &MarketParams, base_cost: f64) -> Result<CorollaryThreshold> {
    let (q, lo, hi) = (&market.qualities, market.theta_lo, market.theta_hi);
    let baseline = cost_gap_market(q, lo, hi, base_cost, 0.0)?;
    let nash = solve_nash_direct(&baseline)?;
    if !h1_holds_weakly(&baseline, &nash, 1e-12 * baseline.max_price()) {
        let msg = check_h1(&baseline, &nash)
            .failing_inequality
            .unwrap_or_default();
        return Err(ModelError::BaselineInvalid(format!(
            "equal-cost market fails interiority/coverage: {msg}"
        )));
    }
    let firm = nash.min_margin_firm();
    if firm != 0 {
        return Err(ModelError::BaselineInvalid(format!(
            "firm {firm} has the smallest margin at equal costs"
        )));
    }

    let pred = |g: f64| bottom_binding_at(q, lo, hi, base_cost, g).1;
    let scale = baseline.max_price();
    let mut upper = 1e-3 * scale;
    let mut bracketed = false;
    for _ in 0..80 {
        if !pred(upper) {
            bracketed = true;
            break;
        }
        upper *= 2.0;
    }
    if !bracketed {
        return Err(ModelError::BaselineInvalid(
            "firm 1 stays binding for every cost step tried".into(),
        ));
    }
    let mu_hat = bisect_last_true(0.0, upper, 1e-13 * scale, pred);
    let past = mu_hat + 1e-9 * scale;
    let limited_by = if bottom_binding_at(q, lo, hi, base_cost, past).0 {
        ThresholdLimit::BindingSwitch
    } else {
        ThresholdLimit::H1Boundary
    };
    Ok(CorollaryThreshold {
        mu_hat,
        limited_by,
        baseline_margins: nash.margins.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_nash_direct;

    fn r1() -> (Market, NashSolution) {
        let m = Market::new(vec![1.0, 2.0], vec![0.5, 1.0], 1.0, 2.0).unwrap();
        let n = solve_nash_direct(&m).unwrap();
        (m, n)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn reference_collusive_and_deviation_prices() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let pc = cartel.collusive_prices(1.0).unwrap();
        assert!(close(pc[0], 1.0) && close(pc[1], 13.0 / 6.0));
        assert!(close(cartel.deviation_price(&pc, 0).unwrap(), 5.0 / 6.0));
        assert!(close(cartel.deviation_price(&pc, 1).unwrap(), 2.0));
    }

    #[test]
    fn zero_uplift_reproduces_nash() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let p1 = n.prices[0];
        assert_eq!(cartel.collusive_prices(p1).unwrap(), n.prices);
        for i in 0..2 {
            let t = cartel.payoff_triple(p1, i).unwrap();
            assert!(close(t.collusive, n.profits[i]));
            assert!(close(t.deviation, n.profits[i]));
            assert!(close(t.nash, n.profits[i]));
            let omega = cartel
                .icc_value(p1, DiscountFactor::new(0.3).unwrap(), i)
                .unwrap();
            assert!(omega.value().abs() < 1e-15);
            assert_eq!(cartel.critical_discount_factor(p1, i).unwrap(), 0.0);
        }
        assert!(matches!(
            cartel.critical_discount_factor_ratio(p1, 0),
            Err(ModelError::ZeroUplift)
        ));
        assert!(matches!(
            cartel.binding_firm(p1),
            Err(ModelError::ZeroUplift)
        ));
        assert_eq!(cartel.report(p1).unwrap().binding_firm, None);
    }

    #[test]
    fn p1c_range() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        assert!(matches!(
            cartel.collusive_prices(1.01),
            Err(ModelError::P1cOutOfRange { .. })
        ));
        assert!(matches!(
            cartel.collusive_prices(0.5),
            Err(ModelError::P1cOutOfRange { .. })
        ));
        assert!(cartel.collusive_prices(f64::NAN).is_err());
        assert_eq!(max_collusive_bottom_price(&m), 1.0);
    }

    #[test]
    fn max_bottom_price_products() {
        for &(v1, lo, want) in &[(2.0, 1.5, 3.0), (0.5, 4.0, 2.0)] {
            let m = Market::new(vec![v1, v1 + 1.0], vec![0.1, 0.2], lo, lo + 1.0).unwrap();
            assert_eq!(max_collusive_bottom_price(&m), want);
        }
    }

    #[test]
    fn reference_payoffs_and_critical_factors() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let t1 = cartel.payoff_triple(1.0, 0).unwrap();
        assert!(close(t1.collusive, 1.0 / 12.0));
        assert!(close(t1.deviation, 1.0 / 9.0));
        assert!(close(t1.nash, 1.0 / 36.0));
        let t2 = cartel.payoff_triple(1.0, 1).unwrap();
        assert!(close(t2.collusive, 35.0 / 36.0));
        assert!(close(t2.deviation, 1.0));
        assert!(close(t2.nash, 25.0 / 36.0));
        for i in 0..2 {
            let d = cartel.payoff_triple_direct(1.0, i).unwrap();
            let c = cartel.payoff_triple(1.0, i).unwrap();
            assert!(close(d.collusive, c.collusive));
            assert!(close(d.deviation, c.deviation));
            assert!(close(d.nash, c.nash));
        }
        assert!(close(
            cartel.critical_discount_factor(1.0, 0).unwrap(),
            1.0 / 3.0
        ));
        assert!(close(
            cartel.critical_discount_factor(1.0, 1).unwrap(),
            1.0 / 11.0
        ));
        assert!(close(
            cartel.critical_discount_factor_ratio(1.0, 0).unwrap(),
            1.0 / 3.0
        ));
        assert_eq!(cartel.binding_firm(1.0).unwrap(), 0);
    }

    #[test]
    fn reference_icc() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let half = DiscountFactor::new(0.5).unwrap();
        assert!(close(
            cartel.icc_value(1.0, half, 0).unwrap().value(),
            1.0 / 72.0
        ));
        let third = DiscountFactor::new(1.0 / 3.0).unwrap();
        assert!(cartel.icc_value(1.0, third, 0).unwrap().value().abs() < 1e-15);
    }

    #[test]
    fn reference_max_sustainable() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let d = DiscountFactor::new(0.2).unwrap();
        assert!(close(cartel.max_sustainable_p1c(d), 5.0 / 6.0));
        assert!((cartel.max_sustainable_p1c_bisection(d) - 5.0 / 6.0).abs() < 1e-9);
        let d = DiscountFactor::new(1.0 / 3.0).unwrap();
        assert!(close(cartel.max_sustainable_p1c(d), 1.0));
        let tiny = DiscountFactor::new(1e-12).unwrap();
        assert!((cartel.max_sustainable_p1c(tiny) - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn equal_margins_give_equal_factors_and_lowest_index_binds() {
        // m_1 = (c2 - c1 + dv (theta_hi - 2 theta_lo)) / 3, m_2 = (c1 - c2 + dv (2 theta_hi - theta_lo)) / 3.
        // Equal when 2 (c2 - c1) = dv (theta_hi + theta_lo): c2 - c1 = 2.5 with theta = [2, 3],
        // giving m = 0.5 and p_1 = 0.6 below theta_lo v_1 = 2.
        let m = Market::new(vec![1.0, 2.0], vec![0.1, 2.6], 2.0, 3.0).unwrap();
        let n = solve_nash_direct(&m).unwrap();
        assert!((n.margins[0] - n.margins[1]).abs() < 1e-14);
        let cartel = Cartel::new(&m, &n).unwrap();
        let p1c = 0.5 * (n.prices[0] + max_collusive_bottom_price(&m));
        let d0 = cartel.critical_discount_factor(p1c, 0).unwrap();
        let d1 = cartel.critical_discount_factor(p1c, 1).unwrap();
        assert!((d0 - d1).abs() < 1e-14);
        assert_eq!(cartel.binding_firm(p1c).unwrap(), 0);
        let check = cartel
            .verify_proposition1(p1c, DiscountFactor::new(0.4).unwrap())
            .unwrap();
        assert!(check.holds());
    }

    #[test]
    fn reference_proposition1() {
        let (m, n) = r1();
        let cartel = Cartel::new(&m, &n).unwrap();
        let check = cartel
            .verify_proposition1(1.0, DiscountFactor::new(0.5).unwrap())
            .unwrap();
        assert!(check.holds());
        assert!(check.omegas[1] > check.omegas[0]);
    }

    #[test]
    fn h1_failure_blocks_analysis() {
        let m = Market::new(vec![1.0, 2.0], vec![1.0, 1.0], 1.0, 3.0).unwrap();
        let n = solve_nash_direct(&m).unwrap();
        assert!(matches!(Cartel::new(&m, &n), Err(ModelError::H1Failed(_))));
    }

    #[test]
    fn equal_cost_three_firms_bottom_binds() {
        // p* = (11/120, 19/30, 281/120), margins (1/24, 7/12, 55/24).
        let m = Market::new(vec![1.0, 2.0, 3.0], vec![0.05, 0.05, 0.05], 0.5, 4.0).unwrap();
        let n = solve_nash_direct(&m).unwrap();
        let cartel = Cartel::new(&m, &n).unwrap();
        assert!(n.margins[0] < n.margins[1] && n.margins[0] < n.margins[2]);
        assert!((n.margins[0] - 1.0 / 24.0).abs() < 1e-14);
        assert_eq!(cartel.binding_firm(0.3).unwrap(), 0);
    }

    #[test]
    fn corollary_threshold_reference() {
        let params = MarketParams {
            qualities: vec![1.0, 2.0],
            costs: vec![0.5, 0.5],
            theta_lo: 1.0,
            theta_hi: 2.0,
        };
        // Duopoly margins with costs (c, c + g):
        //   m_1 = (g + dv (theta_hi - 2 theta_lo)) / 3, m_2 = (-g + dv (2 theta_hi - theta_lo)) / 3,
        // and coverage p_1 < theta_lo v_1 with p_1 = c + m_1.
        // Here m_1 = g/3 (zero at g = 0), crossing m_2 at g = 1.5 where coverage also ends.
        let res = verify_corollary(&params, 0.5).unwrap();
        assert!((res.mu_hat - 1.5).abs() < 1e-9, "{res:?}");
        assert!(res.baseline_margins[0].abs() < 1e-12);

        // theta = [1, 3], c = 0.1: margins cross at g = 2 but coverage fails at g = 1.7.
        let wide = MarketParams {
            theta_hi: 3.0,
            ..params
        };
        let res = verify_corollary(&wide, 0.1).unwrap();
        assert!((res.mu_hat - 1.7).abs() < 1e-9, "{res:?}");
        assert_eq!(res.limited_by, ThresholdLimit::H1Boundary);

        // theta = [1, 3], c = 0.01: coverage ends at g = 1.97, still below the crossing.
        // theta = [1.5, 3], c = 0.01: m_1 = g/3, m_2 = (-g + 4.5)/3 cross at 2.25;
        // coverage p_1 = 0.01 + g/3 < 1.5 needs g < 4.47, so the switch comes first.
        let tall = MarketParams {
            theta_lo: 1.5,
            theta_hi: 3.0,
            ..wide
        };
        let res = verify_corollary(&tall, 0.01).unwrap();
        assert!((res.mu_hat - 2.25).abs() < 1e-9, "{res:?}");
        assert_eq!(res.limited_by, ThresholdLimit::BindingSwitch);
    }
}
