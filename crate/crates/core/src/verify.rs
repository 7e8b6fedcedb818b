//! Randomised property suites over seeded markets.
//!
//! Each suite checks one family of identities on `count` independent
//! instances. Instance `i` draws only from the stream `(seed, i)`, instances
//! run in parallel and results are assembled in index order, so a summary is
//! a pure function of `(verifier, count, seed, tolerance)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::collusion::{
    max_collusive_bottom_price, verify_corollary, Cartel, ThresholdLimit, MARGIN_TIE,
};
use crate::equilibrium::{solve_nash_iterative, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use crate::extensions::hackner::{
    hackner_collusion, hackner_max_collusive_bottom_price, hackner_payoffs_direct,
    margin_order_reversal,
};
use crate::extensions::two_step::{twostep_collusion, twostep_nash, TwoStepParams};
use crate::extensions::uncovered::{
    deviation_keeps_rivals, uncovered_collusive_prices, uncovered_critical_delta_direct,
    uncovered_monotonicity_holds,
};
use crate::market::DiscountFactor;
use crate::sampling::{instance_rng, sample_hackner, sample_market, CostMode, SampledMarket};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verifier {
    Proposition1,
    Corollary,
    SolverCrosscheck,
    DeltaClosedform,
    Appendix1Reduction,
    Appendix2Reduction,
    HacknerOrdering,
}

impl Verifier {
    pub const ALL: [Verifier; 7] = [
        Verifier::Proposition1,
        Verifier::Corollary,
        Verifier::SolverCrosscheck,
        Verifier::DeltaClosedform,
        Verifier::Appendix1Reduction,
        Verifier::Appendix2Reduction,
        Verifier::HacknerOrdering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verifier::Proposition1 => "proposition1",
            Verifier::Corollary => "corollary",
            Verifier::SolverCrosscheck => "solver_crosscheck",
            Verifier::DeltaClosedform => "delta_closedform",
            Verifier::Appendix1Reduction => "appendix1_reduction",
            Verifier::Appendix2Reduction => "appendix2_reduction",
            Verifier::HacknerOrdering => "hackner_ordering",
        }
    }

    /// Pass threshold used when no tolerance is supplied.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Verifier::SolverCrosscheck | Verifier::DeltaClosedform => 1e-10,
            Verifier::Appendix1Reduction => 1e-10,
            Verifier::Appendix2Reduction => 1e-12,
            Verifier::HacknerOrdering => 1e-10,
            Verifier::Proposition1 | Verifier::Corollary => 0.0,
        }
    }
}

impl fmt::Display for Verifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownVerifier(pub String);

impl fmt::Display for UnknownVerifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = Verifier::ALL.iter().map(|v| v.name()).collect();
        write!(
            f,
            "unknown verifier {:?}; expected one of {}",
            self.0,
            names.join(", ")
        )
    }
}

impl std::error::Error for UnknownVerifier {}

impl FromStr for Verifier {
    type Err = UnknownVerifier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verifier::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| UnknownVerifier(s.to_string()))
    }
}

/// Outcome of one suite.
///
/// `metrics` holds named tallies: keys starting with `max_` are maxima over
/// instances, `min_` minima, everything else a sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub verifier: String,
    pub count: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: usize,
    /// Draws rejected by the interiority/coverage chain or a model premise.
    pub discarded: usize,
    pub max_discrepancy: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    /// Full description of the first failing instance.
    pub counterexample: Option<Value>,
}

#[derive(Debug, Default)]
struct Outcome {
    ok: bool,
    discrepancy: Option<f64>,
    discarded: usize,
    metrics: Vec<(&'static str, f64)>,
    witness: Value,
}

impl Outcome {
    fn metric(&mut self, key: &'static str, value: f64) {
        self.metrics.push((key, value));
    }
}

fn merge(metrics: &mut BTreeMap<String, f64>, key: &str, value: f64) {
    let slot = metrics.entry(key.to_string());
    if key.starts_with("max_") {
        slot.and_modify(|v| *v = v.max(value)).or_insert(value);
    } else if key.starts_with("min_") {
        slot.and_modify(|v| *v = v.min(value)).or_insert(value);
    } else {
        *slot.or_insert(0.0) += value;
    }
}

/// Runs `verifier` on `count` instances. `tolerance` overrides the pass
/// threshold for suites that compare numbers.
pub fn run_verifier(
    verifier: Verifier,
    count: usize,
    seed: u64,
    tolerance: Option<f64>,
) -> VerifySummary {
    let tol = tolerance.unwrap_or_else(|| verifier.default_tolerance());
    let outcomes: Vec<Outcome> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut out = check_instance(verifier, seed, i, tol);
            if let Value::Object(map) = &mut out.witness {
                map.insert("instance".into(), json!(i));
            }
            out
        })
        .collect();

    let mut metrics = BTreeMap::new();
    let mut max_discrepancy: Option<f64> = None;
    let mut failures = 0;
    let mut discarded = 0;
    let mut counterexample = None;
    for out in outcomes {
        discarded += out.discarded;
        if let Some(d) = out.discrepancy {
            max_discrepancy = Some(max_discrepancy.map_or(d, |m: f64| m.max(d)));
        }
        for (k, v) in &out.metrics {
            merge(&mut metrics, k, *v);
        }
        if !out.ok {
            failures += 1;
            if counterexample.is_none() {
                counterexample = Some(out.witness);
            }
        }
    }
    VerifySummary {
        verifier: verifier.name().to_string(),
        count,
        seed,
        tolerance: tol,
        passed: failures == 0,
        failures,
        discarded,
        max_discrepancy,
        metrics,
        counterexample,
    }
}

fn check_instance(verifier: Verifier, seed: u64, index: u64, tol: f64) -> Outcome {
    let mut rng = instance_rng(seed, index);
    match verifier {
        Verifier::Proposition1 => proposition1(&mut rng),
        Verifier::Corollary => corollary(&mut rng),
        Verifier::SolverCrosscheck => solver_crosscheck(&mut rng, tol),
        Verifier::DeltaClosedform => delta_closedform(&mut rng, tol),
        Verifier::Appendix1Reduction => uncovered_suite(&mut rng, tol),
        Verifier::Appendix2Reduction => two_step_suite(&mut rng, tol),
        Verifier::HacknerOrdering => hackner_ordering(&mut rng, tol),
    }
}

fn no_market() -> Outcome {
    Outcome {
        ok: false,
        witness: json!({ "error": "no valid market within the attempt limit" }),
        ..Outcome::default()
    }
}

/// Bottom cartel price strictly above the equilibrium price.
fn draw_p1c<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + rng.gen_range(0.01..=1.0) * (hi - lo)
}

fn draw_covered<R: Rng>(rng: &mut R, n_max: usize, mode: CostMode) -> Option<SampledMarket> {
    let n = rng.gen_range(2..=n_max);
    sample_market(rng, n, mode)
}

/// Larger margin implies larger `Omega` and smaller critical factor.
fn proposition1<R: Rng>(rng: &mut R) -> Outcome {
    let Some(s) = draw_covered(rng, 12, CostMode::Increasing) else {
        return no_market();
    };
    let cartel = Cartel::new(&s.market, &s.nash).expect("sampled market passes the chain");
    let p1c = draw_p1c(rng, s.nash.prices[0], max_collusive_bottom_price(&s.market));
    let delta = DiscountFactor::new(rng.gen_range(0.01..0.99)).expect("inside (0, 1)");
    let check = cartel
        .verify_proposition1(p1c, delta)
        .expect("strict uplift inside the admissible range");
    let mut out = Outcome {
        ok: check.holds(),
        discarded: s.discarded,
        ..Outcome::default()
    };
    out.metric("omega_counterexamples", check.omega.is_some() as u8 as f64);
    out.metric(
        "scaled_omega_counterexamples",
        check.scaled_omega.is_some() as u8 as f64,
    );
    out.metric("delta_counterexamples", check.delta.is_some() as u8 as f64);
    out.witness = json!({
        "market": s.market.params(),
        "nash_margins": s.nash.margins,
        "profit_weights": (0..s.market.n()).map(|i| s.market.profit_weight(i)).collect::<Vec<_>>(),
        "p1c": p1c,
        "delta": delta.value(),
        "check": check,
    });
    out
}

/// Equal costs: firm 1 binds, and a positive cost step keeps it binding.
fn corollary<R: Rng>(rng: &mut R) -> Outcome {
    let Some(s) = draw_covered(rng, 3, CostMode::Equal) else {
        return no_market();
    };
    let cartel = Cartel::new(&s.market, &s.nash).expect("sampled market passes the chain");
    let p1c = draw_p1c(rng, s.nash.prices[0], max_collusive_bottom_price(&s.market));
    let binding = cartel.binding_firm(p1c).ok();
    let threshold = verify_corollary(&s.market.params(), s.market.costs()[0]);
    let mut out = Outcome {
        discarded: s.discarded,
        ..Outcome::default()
    };
    out.metric("bottom_binding", (binding == Some(0)) as u8 as f64);
    let mu_hat = threshold.as_ref().map(|t| t.mu_hat).ok();
    match &threshold {
        Ok(t) => {
            out.metric("min_mu_hat", t.mu_hat);
            let key = match t.limited_by {
                ThresholdLimit::BindingSwitch => "limited_by_binding_switch",
                ThresholdLimit::H1Boundary => "limited_by_h1_boundary",
            };
            out.metric(key, 1.0);
        }
        Err(_) => out.metric("threshold_errors", 1.0),
    }
    out.ok = binding == Some(0) && mu_hat.is_some_and(|m| m > 0.0);
    out.witness = json!({
        "market": s.market.params(),
        "nash_margins": s.nash.margins,
        "p1c": p1c,
        "binding_firm": binding,
        "threshold": threshold.as_ref().ok(),
        "threshold_error": threshold.as_ref().err().map(|e| e.to_string()),
    });
    out
}

/// Best-response iteration against the tridiagonal solve.
fn solver_crosscheck<R: Rng>(rng: &mut R, tol: f64) -> Outcome {
    let Some(s) = draw_covered(rng, 50, CostMode::Increasing) else {
        return no_market();
    };
    let iterative = solve_nash_iterative(&s.market, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS);
    let mut out = Outcome {
        discarded: s.discarded,
        ..Outcome::default()
    };
    match iterative {
        Ok(it) => {
            let diff = it
                .prices
                .as_slice()
                .iter()
                .zip(s.nash.prices.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            out.discrepancy = Some(diff);
            out.ok = diff < tol;
            out.metric("max_iterations", it.iterations as f64);
            out.witness = json!({
                "market": s.market.params(),
                "direct": s.nash.prices,
                "iterative": it.prices,
                "discrepancy": diff,
            });
        }
        Err(e) => {
            out.witness = json!({ "market": s.market.params(), "error": e.to_string() });
        }
    }
    out
}

/// `(dp/4) / (dp/4 + m_i)` against `(pi_d - pi_c) / (pi_d - pi*)` from demand.
fn delta_closedform<R: Rng>(rng: &mut R, tol: f64) -> Outcome {
    let Some(s) = draw_covered(rng, 12, CostMode::Increasing) else {
        return no_market();
    };
    let cartel = Cartel::new(&s.market, &s.nash).expect("sampled market passes the chain");
    let p1c = draw_p1c(rng, s.nash.prices[0], max_collusive_bottom_price(&s.market));
    let report = cartel.report(p1c).expect("admissible p1c");
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    let mut exits = 0;
    for i in 0..s.market.n() {
        let direct = cartel
            .payoff_triple_direct(p1c, i)
            .expect("valid firm")
            .ratio();
        worst = worst.max((direct - report.critical_deltas[i]).abs());
        ratios.push(direct);
        let mut deviating = report.collusive_prices.clone().into_inner();
        deviating[i] = report.deviation_prices[i];
        let shares = s.market.shares(&deviating).expect("length matches");
        if shares
            .iter()
            .enumerate()
            .any(|(j, &sh)| j != i && sh <= 0.0)
        {
            exits += 1;
        }
    }
    let mut out = Outcome {
        ok: worst < tol,
        discrepancy: Some(worst),
        discarded: s.discarded,
        ..Outcome::default()
    };
    out.metric("firms_checked", s.market.n() as f64);
    out.metric("deviations_absorbing_a_rival", exits as f64);
    out.witness = json!({
        "market": s.market.params(),
        "p1c": p1c,
        "closed_form": report.critical_deltas,
        "ratio": ratios,
        "discrepancy": worst,
    });
    out
}

/// Uncovered schedule: reduction at the cap, closed form against consumer
/// choice near full retention, and the sign condition.
fn uncovered_suite<R: Rng>(rng: &mut R, tol: f64) -> Outcome {
    let Some(s) = draw_covered(rng, 8, CostMode::Increasing) else {
        return no_market();
    };
    let (m, nash) = (&s.market, &s.nash);
    let n = m.n();
    let cap = max_collusive_bottom_price(m);
    let covered = Cartel::new(m, nash)
        .expect("sampled market passes the chain")
        .report(cap)
        .expect("cap is admissible");
    let at_cap = uncovered_collusive_prices(m, nash, cap).expect("cap is admissible");
    let mut reduction: f64 = 0.0;
    for i in 0..n {
        reduction = reduction
            .max((at_cap.collusive_prices[i] - covered.collusive_prices[i]).abs())
            .max((at_cap.deviation_prices[i] - covered.deviation_prices[i]).abs())
            .max((at_cap.critical_deltas[i] - covered.critical_deltas[i]).abs());
    }

    let (lo, hi) = (m.theta_lo(), m.theta_hi());
    let v1 = m.qualities()[0];
    let near = rng.gen_range(0.99..1.0);
    let moderate = rng.gen_range(0.9..0.99);
    let mut closed_vs_direct: f64 = 0.0;
    let mut sign_failures = Vec::new();
    let mut exits = 0;
    let mut checked = 0;
    let mut reports = Vec::new();
    for (label, s_target) in [("near", near), ("moderate", moderate)] {
        let p1c = v1 * (hi - s_target * (hi - lo));
        let rep = uncovered_collusive_prices(m, nash, p1c).expect("inside the uncovered range");
        for i in 0..n {
            if deviation_keeps_rivals(m, &rep, i) {
                let direct = uncovered_critical_delta_direct(m, nash, &rep, i).expect("valid firm");
                closed_vs_direct = closed_vs_direct.max((direct - rep.critical_deltas[i]).abs());
                checked += 1;
            } else {
                exits += 1;
            }
            if label == "near" && !uncovered_monotonicity_holds(m, nash, &rep, i) {
                sign_failures.push(i);
            }
        }
        reports.push(json!({ "label": label, "s": rep.s, "p1c": p1c, "report": rep }));
    }

    let closed_tol = tol.max(1e-9);
    let mut out = Outcome {
        ok: reduction < tol && closed_vs_direct < closed_tol && sign_failures.is_empty(),
        discrepancy: Some(reduction),
        discarded: s.discarded,
        ..Outcome::default()
    };
    out.metric("max_reduction_discrepancy", reduction);
    out.metric("max_closed_form_vs_consumer_choice", closed_vs_direct);
    out.metric("firms_compared", checked as f64);
    out.metric("deviations_absorbing_a_rival", exits as f64);
    out.metric("sign_condition_failures", sign_failures.len() as f64);
    out.witness = json!({
        "market": m.params(),
        "reduction_discrepancy": reduction,
        "closed_form_vs_consumer_choice": closed_vs_direct,
        "sign_condition_failures": sign_failures,
        "reports": reports,
    });
    out
}

/// Two-step duopoly: uniform-equivalent mass reproduces the uniform prices,
/// and the payoff ratio matches the margin/uplift form for any mass.
fn two_step_suite<R: Rng>(rng: &mut R, tol: f64) -> Outcome {
    let mut discarded = 0;
    loop {
        let Some(s) = sample_market(rng, 2, CostMode::Increasing) else {
            return no_market();
        };
        discarded += s.discarded;
        let m = &s.market;
        let (lo, hi) = (m.theta_lo(), m.theta_hi());
        let tilde = lo + rng.gen_range(0.2..0.8) * (hi - lo);
        let base = TwoStepParams {
            v: [m.qualities()[0], m.qualities()[1]],
            c: [m.costs()[0], m.costs()[1]],
            theta_lo: lo,
            theta_tilde: tilde,
            theta_hi: hi,
            s_mass: TwoStepParams::uniform_mass(lo, tilde, hi),
        };
        let uniform = match twostep_nash(&base) {
            Ok(n) => n,
            Err(_) => {
                discarded += 1;
                continue;
            }
        };
        let (v, c) = (base.v, base.c);
        let dv = v[1] - v[0];
        let expected = [
            (dv * (hi - 2.0 * lo) + 2.0 * c[0] + c[1]) / 3.0,
            (dv * (2.0 * hi - lo) + 2.0 * c[1] + c[0]) / 3.0,
        ];
        let price_gap = (uniform.prices[0] - expected[0])
            .abs()
            .max((uniform.prices[1] - expected[1]).abs());

        let mut skewed = base;
        skewed.s_mass = rng.gen_range(0.05..0.95);
        if (skewed.s_mass - 0.5).abs() < 1e-9 {
            discarded += 1;
            continue;
        }
        let Ok(nash) = twostep_nash(&skewed) else {
            discarded += 1;
            continue;
        };
        let p1c = draw_p1c(rng, nash.prices[0], lo * v[0]);
        let Ok(coll) = twostep_collusion(&skewed, p1c) else {
            discarded += 1;
            continue;
        };
        let ratio_gap = (0..2)
            .map(|i| (coll.payoff_triples[i].ratio() - coll.critical_deltas[i]).abs())
            .fold(0.0, f64::max);
        let delta_tol = tol.max(1e-10);
        let mut out = Outcome {
            ok: price_gap < tol && ratio_gap < delta_tol,
            discrepancy: Some(price_gap.max(ratio_gap)),
            discarded,
            ..Outcome::default()
        };
        out.metric("max_uniform_price_discrepancy", price_gap);
        out.metric("max_ratio_discrepancy", ratio_gap);
        out.witness = json!({
            "uniform_params": base,
            "uniform_prices": uniform.prices,
            "expected_prices": expected,
            "skewed_params": skewed,
            "p1c": p1c,
            "collusion": coll,
        });
        return out;
    }
}

/// Quality-scaled utility: critical factors sort by `v_i m_i`, the closed
/// form matches demand-based payoffs, equal costs make firm 1 bind, and
/// margin/critical-factor reversals are tallied.
fn hackner_ordering<R: Rng>(rng: &mut R, tol: f64) -> Outcome {
    let n = rng.gen_range(2..=8);
    let Some(h) = sample_hackner(rng, n, CostMode::Increasing) else {
        return no_market();
    };
    let p1c = draw_p1c(
        rng,
        h.nash.prices[0],
        hackner_max_collusive_bottom_price(&h.market),
    );
    let rep = hackner_collusion(&h.market, &h.nash, p1c).expect("sampled market is admissible");
    let v = h.market.market().qualities();
    let weighted: Vec<f64> = (0..n).map(|i| v[i] * h.nash.margins[i]).collect();
    let mut order_violation = None;
    for i in 0..n {
        for j in 0..n {
            if i != j
                && weighted[i] > weighted[j] + MARGIN_TIE
                && !(rep.critical_deltas[i] < rep.critical_deltas[j])
            {
                order_violation.get_or_insert((i, j));
            }
        }
    }
    let mut identity: f64 = 0.0;
    for i in 0..n {
        let direct = hackner_payoffs_direct(&h.market, &h.nash, &rep, i).expect("valid firm");
        identity = identity.max((direct.ratio() - rep.critical_deltas[i]).abs());
    }
    let reversal = margin_order_reversal(&h.nash, &rep);

    let m_eq = rng.gen_range(2..=4);
    let Some(eq) = sample_hackner(rng, m_eq, CostMode::Equal) else {
        return no_market();
    };
    let p1c_eq = draw_p1c(
        rng,
        eq.nash.prices[0],
        hackner_max_collusive_bottom_price(&eq.market),
    );
    let rep_eq = hackner_collusion(&eq.market, &eq.nash, p1c_eq).expect("admissible");
    let bottom_binds = rep_eq.binding_firm == Some(0);

    let mut out = Outcome {
        ok: order_violation.is_none() && identity < tol && bottom_binds,
        discrepancy: Some(identity),
        discarded: h.discarded + eq.discarded,
        ..Outcome::default()
    };
    out.metric("order_violations", order_violation.is_some() as u8 as f64);
    out.metric("equal_cost_bottom_binding", bottom_binds as u8 as f64);
    out.metric("margin_reversals", reversal.is_some() as u8 as f64);
    out.witness = json!({
        "market": h.market.market().params(),
        "p1c": p1c,
        "margins": h.nash.margins,
        "weighted_margins": weighted,
        "critical_deltas": rep.critical_deltas,
        "order_violation": order_violation,
        "identity_discrepancy": identity,
        "reversal": reversal,
        "equal_cost_market": eq.market.market().params(),
        "equal_cost_binding_firm": rep_eq.binding_firm,
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in Verifier::ALL {
            assert_eq!(v.name().parse::<Verifier>().unwrap(), v);
        }
        assert!("nope".parse::<Verifier>().is_err());
    }

    #[test]
    fn summaries_are_deterministic() {
        let a = run_verifier(Verifier::DeltaClosedform, 16, 5, None);
        let b = run_verifier(Verifier::DeltaClosedform, 16, 5, None);
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
    }

    #[test]
    fn metric_merge_rules() {
        let mut m = BTreeMap::new();
        for x in [3.0, 1.0, 2.0] {
            merge(&mut m, "max_a", x);
            merge(&mut m, "min_a", x);
            merge(&mut m, "a", x);
        }
        assert_eq!(m["max_a"], 3.0);
        assert_eq!(m["min_a"], 1.0);
        assert_eq!(m["a"], 6.0);
    }
}
