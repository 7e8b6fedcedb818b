//! Reference values derived by hand, each checked against an independent
//! route: hand-solved reaction functions, brute-force grids over consumer
//! choice, or exact fractions.

mod common;

use common::*;
use vertcartel::choice::{profit, Utility};
use vertcartel::collusion::Cartel;
use vertcartel::equilibrium::{check_h1, solve_nash_direct};
use vertcartel::extensions::hackner::{hackner_collusion, hackner_nash, HacknerMarket};
use vertcartel::extensions::two_step::{twostep_collusion, twostep_nash, TwoStepParams};
use vertcartel::extensions::uncovered::{
    deviation_keeps_rivals, uncovered_collusive_prices, uncovered_critical_delta_direct,
    BottomDeviation,
};
use vertcartel::market::{DiscountFactor, Market};
use vertcartel::sampling::CostMode;

#[test]
fn reference_duopoly_equilibrium() {
    let m = r1();
    let nash = solve_nash_direct(&m).unwrap();
    let hand = duopoly_prices([1.0, 2.0], [0.5, 1.0], 1.0, 2.0);
    for (i, expected) in [2.0 / 3.0, 11.0 / 6.0].into_iter().enumerate() {
        assert!(close(nash.prices[i], expected, 1e-12));
        assert!(close(hand[i], expected, 1e-12));
    }
    assert!(close(nash.margins[0], 1.0 / 6.0, 1e-12));
    assert!(close(nash.margins[1], 5.0 / 6.0, 1e-12));
    assert!(close(nash.thetas[0], 7.0 / 6.0, 1e-12));
    assert!(close(nash.profits[0], 1.0 / 36.0, 1e-12));
    assert!(close(nash.profits[1], 25.0 / 36.0, 1e-12));
    assert!(check_h1(&m, &nash).passes());
    let gain = core_grid_gain(&m, &nash, 1e-4);
    assert!(gain <= 1e-6, "grid deviation gains {gain}");
}

#[test]
fn reference_duopoly_collusion() {
    let m = r1();
    let nash = solve_nash_direct(&m).unwrap();
    let cartel = Cartel::new(&m, &nash).unwrap();
    let r = cartel.report(1.0).unwrap();
    assert!(close(r.collusive_prices[0], 1.0, 1e-12));
    assert!(close(r.collusive_prices[1], 13.0 / 6.0, 1e-12));
    assert!(close(r.deviation_prices[0], 5.0 / 6.0, 1e-12));
    assert!(close(r.deviation_prices[1], 2.0, 1e-12));
    assert!(close(r.critical_deltas[0], 1.0 / 3.0, 1e-12));
    assert!(close(r.critical_deltas[1], 1.0 / 11.0, 1e-12));
    assert_eq!(r.binding_firm, Some(0));
    let omega = cartel
        .icc_value(1.0, DiscountFactor::new(0.5).unwrap(), 0)
        .unwrap();
    assert!(close(omega.value(), 1.0 / 72.0, 1e-12));

    // Reaction functions by hand: p_1 = (p_2 - dv theta_lo + c_1) / 2 and
    // p_2 = (p_1 + dv theta_hi + c_2) / 2.
    assert!(close((13.0 / 6.0 - 1.0 + 0.5) / 2.0, 5.0 / 6.0, 1e-15));
    assert!(close((1.0 + 2.0 + 1.0) / 2.0, 2.0, 1e-15));

    // Grid search for each deviation against the collusive rival price.
    for i in 0..2 {
        let mut p = r.collusive_prices.clone().into_inner();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..=40_000 {
            p[i] = k as f64 * 1e-4;
            let v = choice_profit(&m, &p, i);
            if v > best.0 {
                best = (v, p[i]);
            }
        }
        assert!(
            close(best.1, r.deviation_prices[i], 1e-4),
            "firm {i}: {best:?}"
        );
    }
}

#[test]
fn reference_duopoly_above_coverage() {
    let m = r1();
    let nash = solve_nash_direct(&m).unwrap();
    let rep = uncovered_collusive_prices(&m, &nash, 1.1).unwrap();
    // s = (theta_hi - p1c / v_1) / (theta_hi - theta_lo) = 0.9; the marginal
    // consumer moves to 1.1 + 0.9 / 6 = 1.25, so p_2 = 1.1 + 1.25 = 2.35.
    assert!(close(rep.s, 0.9, 1e-12));
    assert!(close(rep.collusive_prices[1], 2.35, 1e-12));
    assert!(close(rep.x[1], 1.0 / 12.0, 1e-12));
    assert!(close(rep.y[0], 1.0 / 24.0, 1e-12));
    assert_eq!(rep.y[1], 0.0);
    assert_eq!(rep.bottom_deviation, BottomDeviation::Covers);
    assert!(close(rep.deviation_prices[0], 0.925, 1e-12));
    // Exact fractions of the critical-factor formula in units of 1/14400 and 1/3600.
    assert!(close(rep.critical_deltas[0], 1305.0 / 2201.0, 1e-12));
    assert!(close(rep.critical_deltas[1], 324.0 / 1469.0, 1e-12));
    assert!(deviation_keeps_rivals(&m, &rep, 0));
    let direct = uncovered_critical_delta_direct(&m, &nash, &rep, 0).unwrap();
    assert!(close(direct, rep.critical_deltas[0], 1e-9));
    // The top firm's deviation to 2.05 moves the marginal consumer to 0.95,
    // below theta_lo: firm 1 loses every customer, which the linear closed
    // form does not capture.
    assert!(close(rep.deviation_prices[1], 2.05, 1e-12));
    assert!(!deviation_keeps_rivals(&m, &rep, 1));
}

#[test]
fn two_step_uniform_mass_reproduces_reference() {
    let p = TwoStepParams {
        v: [1.0, 2.0],
        c: [0.5, 1.0],
        theta_lo: 1.0,
        theta_tilde: 1.4,
        theta_hi: 2.0,
        s_mass: 0.4,
    };
    let nash = twostep_nash(&p).unwrap();
    assert!(close(nash.prices[0], 2.0 / 3.0, 1e-12));
    assert!(close(nash.prices[1], 11.0 / 6.0, 1e-12));
    let c = twostep_collusion(&p, 1.0).unwrap();
    assert!(close(c.critical_deltas[0], 1.0 / 3.0, 1e-12));
    assert!(close(c.critical_deltas[1], 1.0 / 11.0, 1e-12));
}

#[test]
fn two_step_equilibrium_survives_grid_deviations() {
    let p = TwoStepParams {
        v: [1.0, 2.0],
        c: [0.5, 1.0],
        theta_lo: 1.0,
        theta_tilde: 1.4,
        theta_hi: 2.0,
        s_mass: 0.3,
    };
    let nash = twostep_nash(&p).unwrap();
    let measure = p.measure();
    let gain = grid_gain(nash.prices.as_slice(), &p.c, 4.0, 1e-4, |prices, i| {
        profit(&p.v, prices, p.c[i], i, Utility::Additive, &measure, true)
    });
    assert!(gain <= 1e-6, "grid deviation gains {gain}");
    // Demand from the two-step measure agrees with the closed-form masses.
    let d = p.demands([nash.prices[0], nash.prices[1]]);
    for (i, di) in d.into_iter().enumerate() {
        let m = nash.prices[i] - p.c[i];
        let direct = profit(
            &p.v,
            nash.prices.as_slice(),
            p.c[i],
            i,
            Utility::Additive,
            &measure,
            true,
        );
        assert!(close(direct, m * di, 1e-12));
    }
}

#[test]
fn hackner_equilibria_survive_grid_deviations() {
    for index in 0..10 {
        let n = 2 + index as usize % 3;
        let h = sampled_hackner(11, index, n, CostMode::Increasing);
        let gain = hackner_grid_gain(&h.market, &h.nash, 1e-3);
        assert!(gain <= 1e-6, "instance {index}: gain {gain}");
    }
}

#[test]
fn hackner_three_firm_reference() {
    let m = Market::new(vec![1.0, 1.5, 2.4], vec![0.1, 0.3, 0.4], 0.8, 3.0).unwrap();
    let hm = HacknerMarket::new(m.clone()).unwrap();
    let nash = hackner_nash(&hm).unwrap();
    // Same equilibrium as the additive model on u = v p with costs v c.
    let scaled = Market::new(
        m.qualities().to_vec(),
        m.qualities()
            .iter()
            .zip(m.costs())
            .map(|(v, c)| v * c)
            .collect(),
        0.8,
        3.0,
    )
    .unwrap();
    let u = solve_nash_direct(&scaled).unwrap();
    for i in 0..3 {
        assert!(close(nash.prices[i] * m.qualities()[i], u.prices[i], 1e-12));
    }
    let gain = hackner_grid_gain(&hm, &nash, 1e-4);
    assert!(gain <= 1e-6, "grid deviation gains {gain}");
    let r = hackner_collusion(&hm, &nash, 0.8).unwrap();
    let weighted: Vec<f64> = (0..3).map(|i| m.qualities()[i] * nash.margins[i]).collect();
    for i in 0..3 {
        for j in 0..3 {
            if weighted[i] > weighted[j] {
                assert!(r.critical_deltas[i] < r.critical_deltas[j]);
            }
        }
    }
}

#[test]
fn sampled_equilibria_survive_grid_deviations() {
    for index in 0..10 {
        let n = 2 + index as usize % 3;
        let s = sampled(5, index, n, CostMode::Increasing);
        let gain = core_grid_gain(&s.market, &s.nash, 1e-3);
        assert!(gain <= 1e-6, "instance {index}: gain {gain}");
    }
}
