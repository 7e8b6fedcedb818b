//! Static price equilibrium of the covered vertically differentiated market.
//!
//! Two independent routes compute the same vector: simultaneous best-response
//! iteration (a contraction with modulus 1/2 in the sup norm) and a direct
//! solve of the tridiagonal first-order-condition system.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::market::{Market, PriceVector};
use crate::numerics::Tridiagonal;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Equilibrium prices with the quantities derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashSolution {
    pub prices: PriceVector,
    pub thetas: Vec<f64>,
    pub shares: Vec<f64>,
    pub margins: Vec<f64>,
    pub profits: Vec<f64>,
    /// Best-response rounds used; 0 for the direct solver.
    pub iterations: usize,
}

impl NashSolution {
    /// Derives thresholds, shares, margins and profits for `prices`.
    pub fn from_prices(market: &Market, prices: Vec<f64>, iterations: usize) -> Result<Self> {
        let thetas = market.thresholds(&prices)?;
        let shares = market.shares(&prices)?;
        let margins: Vec<f64> = prices
            .iter()
            .zip(market.costs())
            .map(|(p, c)| p - c)
            .collect();
        let profits = margins.iter().zip(&shares).map(|(m, s)| m * s).collect();
        Ok(NashSolution {
            prices: PriceVector::new(prices),
            thetas,
            shares,
            margins,
            profits,
            iterations,
        })
    }

    pub fn n(&self) -> usize {
        self.prices.len()
    }

    /// Index of the smallest margin. Margins within `1e-12` (relative to the
    /// largest margin) of each other count as tied, and ties go to the lowest index.
    pub fn min_margin_firm(&self) -> usize {
        let scale = self.margins.iter().fold(1e-300f64, |a, m| a.max(m.abs()));
        let tie = 1e-12 * scale;
        let mut best = 0;
        for (i, &m) in self.margins.iter().enumerate().skip(1) {
            if m < self.margins[best] - tie {
                best = i;
            }
        }
        best
    }
}

/// Profit-maximising price of firm `i` given its neighbours.
///
/// `neighbors` is `[p_2]` for the bottom firm, `[p_{n-1}]` for the top firm and
/// `[p_{i-1}, p_{i+1}]` otherwise.
pub fn best_response(market: &Market, i: usize, neighbors: &[f64]) -> Result<f64> {
    let n = market.n();
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
    let v = market.qualities();
    let c = market.costs();
    let p = if i == 0 {
        0.5 * (neighbors[0] + c[0] - market.theta_lo() * (v[1] - v[0]))
    } else if i == n - 1 {
        0.5 * (neighbors[0] + c[i] + market.theta_hi() * (v[i] - v[i - 1]))
    } else {
        let below = v[i + 1] - v[i];
        let above = v[i] - v[i - 1];
        0.5 * (neighbors[0] * below + neighbors[1] * above) / (v[i + 1] - v[i - 1]) + 0.5 * c[i]
    };
    Ok(p)
}

/// Best response of firm `i` read off a full price vector.
pub fn best_response_in(market: &Market, prices: &[f64], i: usize) -> Result<f64> {
    let n = market.n();
    if prices.len() != n {
        return Err(ModelError::PriceLength {
            expected: n,
            got: prices.len(),
        });
    }
    if i == 0 {
        best_response(market, 0, &prices[1..2])
    } else if i == n - 1 {
        best_response(market, i, &prices[i - 1..i])
    } else {
        best_response(market, i, &[prices[i - 1], prices[i + 1]])
    }
}

/// Largest `|best_response_i(p) - p_i|` over all firms.
pub fn best_response_residual(market: &Market, prices: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..market.n() {
        worst = worst.max((best_response_in(market, prices, i)? - prices[i]).abs());
    }
    Ok(worst)
}

/// Simultaneous (Jacobi) best-response iteration from the zero vector.
///
/// Stops once the largest price change falls below `tolerance` and returns
/// the last iterate.
pub fn solve_nash_iterative(
    market: &Market,
    tolerance: f64,
    max_iterations: usize,
) -> Result<NashSolution> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(ModelError::InvalidTolerance(tolerance));
    }
    let n = market.n();
    let mut prices = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for iteration in 1..=max_iterations {
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = best_response_in(market, &prices, i)?;
        }
        change = prices
            .iter()
            .zip(&next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut prices, &mut next);
        if change < tolerance {
            return NashSolution::from_prices(market, prices, iteration);
        }
    }
    Err(ModelError::NoConvergence {
        iterations: max_iterations,
        last_change: change,
    })
}

/// First-order-condition system, each row scaled so its diagonal is 2.
pub fn foc_system(market: &Market) -> Tridiagonal {
    let n = market.n();
    let v = market.qualities();
    let c = market.costs();
    let mut sys = Tridiagonal::with_len(n);
    for i in 0..n {
        sys.diag[i] = 2.0;
        if i == 0 {
            sys.upper[0] = -1.0;
            sys.rhs[0] = c[0] - market.theta_lo() * (v[1] - v[0]);
        } else if i == n - 1 {
            sys.lower[i] = -1.0;
            sys.rhs[i] = c[i] + market.theta_hi() * (v[i] - v[i - 1]);
        } else {
            let span = v[i + 1] - v[i - 1];
            sys.lower[i] = -(v[i + 1] - v[i]) / span;
            sys.upper[i] = -(v[i] - v[i - 1]) / span;
            sys.rhs[i] = c[i];
        }
    }
    sys
}

/// Solves the first-order conditions directly by tridiagonal elimination.
pub fn solve_nash_direct(market: &Market) -> Result<NashSolution> {
    let prices = foc_system(market).solve()?;
    NashSolution::from_prices(market, prices, 0)
}

/// Diagonal-dominance test on each firm's profit Hessian row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub holds: bool,
    /// `d2pi_i/dp_i^2 + sum_j |d2pi_i/dp_i dp_j|`, negative when the condition holds.
    pub slack: Vec<f64>,
}

pub fn check_contraction(market: &Market) -> ContractionReport {
    let n = market.n();
    let v = market.qualities();
    let slack: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                let g = market.quality_gap(0);
                -2.0 / g + 1.0 / g
            } else if i == n - 1 {
                let g = market.quality_gap(n - 2);
                -2.0 / g + 1.0 / g
            } else {
                (v[i - 1] - v[i + 1]) / ((v[i + 1] - v[i]) * (v[i] - v[i - 1]))
            }
        })
        .collect();
    ContractionReport {
        holds: slack.iter().all(|&s| s < 0.0),
        slack,
    }
}

/// Outcome of the interiority / coverage chain
/// `theta_hi > theta_{n-1} > ... > theta_1 > theta_lo > p_1/v_1 > 0`
/// together with `p_i >= c_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub interior: bool,
    pub covered: bool,
    pub nonnegative_margins: bool,
    pub failing_inequality: Option<String>,
}

impl H1Report {
    pub fn passes(&self) -> bool {
        self.interior && self.covered && self.nonnegative_margins
    }

    pub fn into_result(self) -> Result<()> {
        match self.failing_inequality {
            Some(msg) if !self.passes() => Err(ModelError::H1Failed(msg)),
            _ => Ok(()),
        }
    }
}

pub fn check_h1(market: &Market, solution: &NashSolution) -> H1Report {
    check_chain(
        &solution.thetas,
        market.theta_lo(),
        market.theta_hi(),
        solution.prices[0] / market.qualities()[0],
        &solution.margins,
    )
}

/// Non-strict version of the chain with an absolute slack, for boundary
/// cases such as an equal-cost duopoly with `theta_hi = 2 theta_lo` where the
/// bottom margin is exactly zero.
pub fn h1_holds_weakly(market: &Market, solution: &NashSolution, slack: f64) -> bool {
    let t = &solution.thetas;
    let k = t.len();
    let reservation = solution.prices[0] / market.qualities()[0];
    market.theta_hi() + slack >= t[k - 1]
        && t.windows(2).all(|w| w[1] + slack >= w[0])
        && t[0] + slack >= market.theta_lo()
        && market.theta_lo() + slack >= reservation
        && reservation + slack >= 0.0
        && solution.margins.iter().all(|&m| m + slack >= 0.0)
}

/// Shared by the core and quality-scaled-utility variants; `bottom_reservation`
/// is the taste level below which a consumer would not buy the bottom variant.
pub(crate) fn check_chain(
    thetas: &[f64],
    theta_lo: f64,
    theta_hi: f64,
    bottom_reservation: f64,
    margins: &[f64],
) -> H1Report {
    let mut failing = None;
    let mut note = |msg: String| {
        if failing.is_none() {
            failing = Some(msg);
        }
    };

    let mut interior = true;
    let k_top = thetas.len();
    if !(theta_hi > thetas[k_top - 1]) {
        interior = false;
        note(format!(
            "theta_hi={theta_hi} > theta[{}]={}",
            k_top - 1,
            thetas[k_top - 1]
        ));
    }
    for k in (1..k_top).rev() {
        if !(thetas[k] > thetas[k - 1]) {
            interior = false;
            note(format!(
                "theta[{k}]={} > theta[{}]={}",
                thetas[k],
                k - 1,
                thetas[k - 1]
            ));
        }
    }
    if !(thetas[0] > theta_lo) {
        interior = false;
        note(format!("theta[0]={} > theta_lo={theta_lo}", thetas[0]));
    }

    let mut covered = true;
    if !(theta_lo > bottom_reservation) {
        covered = false;
        note(format!(
            "theta_lo={theta_lo} > p_1/v_1={bottom_reservation}"
        ));
    }
    if !(bottom_reservation > 0.0) {
        covered = false;
        note(format!("p_1/v_1={bottom_reservation} > 0"));
    }

    let mut nonnegative_margins = true;
    for (i, &m) in margins.iter().enumerate() {
        if !(m >= 0.0) {
            nonnegative_margins = false;
            note(format!("p[{i}] - c[{i}] = {m} >= 0"));
        }
    }

    H1Report {
        interior,
        covered,
        nonnegative_margins,
        failing_inequality: failing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r1() -> Market {
        Market::new(vec![1.0, 2.0], vec![0.5, 1.0], 1.0, 2.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn reference_best_responses() {
        let m = r1();
        assert!(close(
            best_response(&m, 0, &[13.0 / 6.0]).unwrap(),
            5.0 / 6.0,
            1e-15
        ));
        assert!(close(
            best_response(&m, 1, &[2.0 / 3.0]).unwrap(),
            11.0 / 6.0,
            1e-15
        ));
    }

    #[test]
    fn intermediate_best_response_to_own_cost_is_cost() {
        let m = Market::new(vec![1.0, 1.7, 4.0], vec![0.5, 0.9, 1.0], 1.0, 2.0).unwrap();
        assert!(close(
            best_response(&m, 1, &[0.9, 0.9]).unwrap(),
            0.9,
            1e-15
        ));
    }

    #[test]
    fn best_response_arity_and_range() {
        let m = Market::new(vec![1.0, 2.0, 3.0], vec![0.5, 0.6, 0.7], 1.0, 2.0).unwrap();
        assert!(matches!(
            best_response(&m, 1, &[1.0]),
            Err(ModelError::WrongNeighborArity {
                firm: 1,
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            best_response(&m, 0, &[1.0, 2.0]),
            Err(ModelError::WrongNeighborArity {
                firm: 0,
                expected: 1,
                got: 2
            })
        ));
        assert!(matches!(
            best_response(&m, 3, &[1.0]),
            Err(ModelError::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn reference_nash_both_routes() {
        let m = r1();
        let it = solve_nash_iterative(&m, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        let direct = solve_nash_direct(&m).unwrap();
        for sol in [&it, &direct] {
            assert!(close(sol.prices[0], 2.0 / 3.0, 1e-12));
            assert!(close(sol.prices[1], 11.0 / 6.0, 1e-12));
            assert!(close(sol.thetas[0], 7.0 / 6.0, 1e-12));
        }
        assert!(it.iterations > 0);
        assert_eq!(direct.iterations, 0);
    }

    #[test]
    fn iterative_residual_below_tolerance() {
        let m = Market::new(vec![1.0, 2.0, 3.0], vec![0.5, 0.6, 0.7], 1.0, 2.0).unwrap();
        for tol in [1e-6, 1e-9, 1e-12] {
            let sol = solve_nash_iterative(&m, tol, DEFAULT_MAX_ITERATIONS).unwrap();
            assert!(best_response_residual(&m, sol.prices.as_slice()).unwrap() <= tol);
        }
    }

    #[test]
    fn three_firm_cross_check() {
        let m = Market::new(vec![1.0, 2.0, 3.0], vec![0.5, 0.6, 0.7], 1.0, 2.0).unwrap();
        let a = solve_nash_iterative(&m, 1e-12, DEFAULT_MAX_ITERATIONS).unwrap();
        let b = solve_nash_direct(&m).unwrap();
        for i in 0..3 {
            assert!(close(a.prices[i], b.prices[i], 1e-10));
        }
    }

    #[test]
    fn symmetric_cost_duopoly_closed_form() {
        for &(c, lo, hi) in &[(0.3, 1.0, 2.5), (1.0, 0.5, 3.0), (0.1, 1.2, 4.0)] {
            let m = Market::new(vec![1.0, 2.0], vec![c, c], lo, hi).unwrap();
            let sol = solve_nash_direct(&m).unwrap();
            assert!(close(sol.prices[0], c + (hi - 2.0 * lo) / 3.0, 1e-14));
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let m = r1();
        assert!(matches!(
            solve_nash_iterative(&m, 1e-12, 3),
            Err(ModelError::NoConvergence { iterations: 3, .. })
        ));
        assert!(matches!(
            solve_nash_iterative(&m, 0.0, 10),
            Err(ModelError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn contraction_slack() {
        let rep = check_contraction(&r1());
        assert!(rep.holds);
        assert_eq!(rep.slack, vec![-1.0, -1.0]);
        let m = Market::new(vec![1.0, 2.0, 3.0], vec![0.5, 0.6, 0.7], 1.0, 2.0).unwrap();
        assert_eq!(check_contraction(&m).slack[1], -2.0);
    }

    #[test]
    fn h1_reference_passes() {
        let m = r1();
        let sol = solve_nash_direct(&m).unwrap();
        let rep = check_h1(&m, &sol);
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.failing_inequality.is_none());
        assert!(close(sol.margins[0], 1.0 / 6.0, 1e-12));
        assert!(close(sol.margins[1], 5.0 / 6.0, 1e-12));
    }

    #[test]
    fn h1_coverage_failure() {
        let m = Market::new(vec![1.0, 2.0], vec![1.0, 1.0], 1.0, 3.0).unwrap();
        let sol = solve_nash_direct(&m).unwrap();
        assert!(close(sol.prices[0], 4.0 / 3.0, 1e-14));
        let rep = check_h1(&m, &sol);
        assert!(rep.interior);
        assert!(!rep.covered);
        assert!(rep.failing_inequality.unwrap().contains("p_1/v_1"));
    }

    #[test]
    fn h1_near_equal_qualities_not_interior() {
        let m = Market::new(vec![1.0, 1.001], vec![0.5, 1.0], 1.0, 2.0).unwrap();
        let sol = solve_nash_direct(&m).unwrap();
        let rep = check_h1(&m, &sol);
        assert!(!rep.interior);
        assert!(sol.thetas[0] > m.theta_hi());
    }
}
