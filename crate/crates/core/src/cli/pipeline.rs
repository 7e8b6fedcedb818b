//! Solve, collude, sweep and verify pipelines behind the command line.

use super::report::{
    CollusionSummary, ErrorInfo, FirmRow, Regime, Report, SolverDiagnostics, Status, SweepRow,
    SweepTable, UncoveredDetails,
};
use super::scenario::{Analysis, BottomPrice, ModelKind, Scenario, SweepAxis};
use super::{CliError, EXIT_MODEL, EXIT_OK, EXIT_VERIFY};
use crate::collusion::{
    max_collusive_bottom_price, Cartel, CollusionReport, PayoffTriple, P1C_SLACK,
};
use crate::equilibrium::{
    best_response_residual, check_h1, solve_nash_direct, solve_nash_iterative, NashSolution,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::error::ModelError;
use crate::extensions::hackner::{
    hackner_best_response_in, hackner_collusion, hackner_equilibrium, hackner_h1,
    hackner_max_collusive_bottom_price, HacknerMarket,
};
use crate::extensions::two_step::{twostep_collusion, twostep_nash, TwoStepParams};
use crate::extensions::uncovered::{uncovered_collusive_prices, uncovered_payoffs_direct};
use crate::market::{validate_market, DiscountFactor, Market, MarketParams};
use crate::verify::{run_verifier, Verifier};

/// Command-line overrides applied on top of the scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Pass threshold for verifiers and stopping tolerance for the
    /// best-response cross-check.
    pub tolerance: Option<f64>,
}

enum Model {
    Core(Market),
    Hackner(HacknerMarket),
    TwoStep(TwoStepParams),
}

impl Model {
    fn build(
        kind: ModelKind,
        market: Option<&MarketParams>,
        two_step: Option<&TwoStepParams>,
    ) -> Result<Model, ModelError> {
        match kind {
            ModelKind::Core => Ok(Model::Core(validate_market(
                market.expect("checked at load").clone(),
            )?)),
            ModelKind::Hackner => Ok(Model::Hackner(HacknerMarket::new(validate_market(
                market.expect("checked at load").clone(),
            )?)?)),
            ModelKind::TwoStep => {
                let p = *two_step.expect("checked at load");
                p.validate()?;
                Ok(Model::TwoStep(p))
            }
        }
    }

    fn qualities(&self) -> Vec<f64> {
        match self {
            Model::Core(m) => m.qualities().to_vec(),
            Model::Hackner(h) => h.market().qualities().to_vec(),
            Model::TwoStep(p) => p.v.to_vec(),
        }
    }

    fn costs(&self) -> Vec<f64> {
        match self {
            Model::Core(m) => m.costs().to_vec(),
            Model::Hackner(h) => h.market().costs().to_vec(),
            Model::TwoStep(p) => p.c.to_vec(),
        }
    }

    fn max_p1c(&self) -> f64 {
        match self {
            Model::Core(m) => max_collusive_bottom_price(m),
            Model::Hackner(h) => hackner_max_collusive_bottom_price(h),
            Model::TwoStep(p) => p.theta_lo * p.v[0],
        }
    }
}

struct Solved {
    nash: NashSolution,
    diagnostics: SolverDiagnostics,
    /// Interiority/coverage failure; prices are still reported.
    h1_error: Option<ModelError>,
}

fn solve(model: &Model, tolerance: f64) -> Result<Solved, ModelError> {
    match model {
        Model::Core(m) => {
            let nash = solve_nash_direct(m)?;
            let residual = best_response_residual(m, nash.prices.as_slice())?;
            let (iterations, discrepancy) =
                match solve_nash_iterative(m, tolerance, DEFAULT_MAX_ITERATIONS) {
                    Ok(it) => {
                        let gap = it
                            .prices
                            .as_slice()
                            .iter()
                            .zip(nash.prices.as_slice())
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        (Some(it.iterations), Some(gap))
                    }
                    Err(_) => (None, None),
                };
            let h1 = check_h1(m, &nash);
            Ok(Solved {
                h1_error: h1.clone().into_result().err(),
                diagnostics: SolverDiagnostics {
                    method: "tridiagonal".into(),
                    thetas: nash.thetas.clone(),
                    best_response_residual: Some(residual),
                    iterations,
                    iterative_discrepancy: discrepancy,
                    h1: Some(h1),
                },
                nash,
            })
        }
        Model::Hackner(h) => {
            let nash = hackner_equilibrium(h)?;
            let p = nash.prices.as_slice();
            let mut residual = 0.0f64;
            for i in 0..h.n() {
                residual = residual.max((hackner_best_response_in(h, p, i)? - p[i]).abs());
            }
            let h1 = hackner_h1(h, &nash);
            Ok(Solved {
                h1_error: h1.clone().into_result().err(),
                diagnostics: SolverDiagnostics {
                    method: "tridiagonal".into(),
                    thetas: nash.thetas.clone(),
                    best_response_residual: Some(residual),
                    iterations: None,
                    iterative_discrepancy: None,
                    h1: Some(h1),
                },
                nash,
            })
        }
        Model::TwoStep(p) => {
            let nash = twostep_nash(p)?;
            Ok(Solved {
                diagnostics: SolverDiagnostics {
                    method: "closed_form".into(),
                    thetas: nash.thetas.clone(),
                    best_response_residual: None,
                    iterations: None,
                    iterative_discrepancy: None,
                    h1: None,
                },
                nash,
                h1_error: None,
            })
        }
    }
}

fn firm_rows(model: &Model, nash: &NashSolution) -> Vec<FirmRow> {
    let (v, c) = (model.qualities(), model.costs());
    (0..nash.n())
        .map(|i| FirmRow {
            firm: i + 1,
            quality: v[i],
            cost: c[i],
            price: nash.prices[i],
            margin: nash.margins[i],
            share: nash.shares[i],
            profit: nash.profits[i],
            collusive_price: None,
            deviation_price: None,
            collusive_profit: None,
            deviation_profit: None,
            critical_delta: None,
            omega: None,
        })
        .collect()
}

struct Collusion {
    summary: CollusionSummary,
    collusive: Vec<f64>,
    deviation: Vec<f64>,
    triples: Vec<PayoffTriple>,
    critical_deltas: Vec<f64>,
}

fn from_report(r: CollusionReport, binding_firm: Option<usize>) -> Collusion {
    Collusion {
        summary: CollusionSummary {
            regime: Regime::Covered,
            p1c: r.p1c,
            delta_p: r.delta_p,
            delta: None,
            binding_firm: binding_firm.map(|i| i + 1),
            max_critical_delta: r.max_critical_delta(),
            sustainable: None,
            uncovered: None,
        },
        collusive: r.collusive_prices.into_inner(),
        deviation: r.deviation_prices.into_inner(),
        triples: r.payoff_triples,
        critical_deltas: r.critical_deltas,
    }
}

/// Largest critical factor, ties to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let mut best = 0;
    for (i, &d) in values.iter().enumerate().skip(1) {
        if d > values[best] + 1e-12 * scale {
            best = i;
        }
    }
    best
}

/// Collusion at `p1c` for a solved model. Core markets switch to the
/// uncovered schedule when `p1c` exceeds what the lowest taste pays.
fn collude(
    model: &Model,
    solved: &Solved,
    p1c: BottomPrice,
    delta: Option<f64>,
) -> Result<Collusion, ModelError> {
    if let Some(e) = &solved.h1_error {
        return Err(e.clone());
    }
    let delta = delta
        .map(DiscountFactor::new)
        .transpose()?
        .map(|d| d.value());
    let cap = model.max_p1c();
    let p1c = match p1c {
        BottomPrice::Value(x) => x,
        BottomPrice::Named(_) => cap,
    };
    let nash = &solved.nash;
    let mut out = match model {
        Model::Core(m) => {
            if p1c > cap + P1C_SLACK * cap.abs().max(1.0) {
                let rep = uncovered_collusive_prices(m, nash, p1c)?;
                let triples = (0..m.n())
                    .map(|i| uncovered_payoffs_direct(m, nash, &rep, i))
                    .collect::<Result<Vec<_>, _>>()?;
                let binding = (rep.delta_p > 0.0).then(|| argmax(&rep.critical_deltas));
                Collusion {
                    summary: CollusionSummary {
                        regime: Regime::Uncovered,
                        p1c: rep.p1c,
                        delta_p: rep.delta_p,
                        delta: None,
                        binding_firm: binding.map(|i| i + 1),
                        max_critical_delta: rep.critical_deltas.iter().copied().fold(0.0, f64::max),
                        sustainable: None,
                        uncovered: Some(UncoveredDetails {
                            s: rep.s,
                            thresholds: rep.thresholds.clone(),
                            x: rep.x.clone(),
                            y: rep.y.clone(),
                            bottom_deviation: rep.bottom_deviation,
                        }),
                    },
                    collusive: rep.collusive_prices.into_inner(),
                    deviation: rep.deviation_prices.into_inner(),
                    triples,
                    critical_deltas: rep.critical_deltas,
                }
            } else {
                let r = Cartel::new(m, nash)?.report(p1c)?;
                let binding = r.binding_firm;
                from_report(r, binding)
            }
        }
        Model::Hackner(h) => {
            let r = hackner_collusion(h, nash, p1c)?;
            let binding = r.binding_firm;
            from_report(r, binding)
        }
        Model::TwoStep(p) => {
            let r = twostep_collusion(p, p1c)?;
            let binding = (r.delta_p > 0.0).then(|| argmax(&r.critical_deltas));
            Collusion {
                summary: CollusionSummary {
                    regime: Regime::Covered,
                    p1c: r.p1c,
                    delta_p: r.delta_p,
                    delta: None,
                    binding_firm: binding.map(|i| i + 1),
                    max_critical_delta: r.critical_deltas.iter().copied().fold(0.0, f64::max),
                    sustainable: None,
                    uncovered: None,
                },
                collusive: r.collusive_prices.into_inner(),
                deviation: r.deviation_prices.into_inner(),
                triples: r.payoff_triples,
                critical_deltas: r.critical_deltas,
            }
        }
    };
    out.summary.delta = delta;
    out.summary.sustainable = delta.map(|d| out.critical_deltas.iter().all(|&x| x <= d));
    Ok(out)
}

fn fill_rows(rows: &mut [FirmRow], coll: &Collusion) {
    let delta = coll.summary.delta;
    for (i, row) in rows.iter_mut().enumerate() {
        let t = coll.triples[i];
        row.collusive_price = Some(coll.collusive[i]);
        row.deviation_price = Some(coll.deviation[i]);
        row.collusive_profit = Some(t.collusive);
        row.deviation_profit = Some(t.deviation);
        // Equilibrium profit is the row's `profit`; the triple's value agrees.
        row.critical_delta = Some(coll.critical_deltas[i]);
        row.omega = delta.map(|d| t.collusive - (1.0 - d) * t.deviation - d * row.profit);
    }
}

fn error_info(e: &ModelError) -> ErrorInfo {
    ErrorInfo {
        kind: e.kind().to_string(),
        message: e.to_string(),
    }
}

fn empty_report(scenario: &Scenario) -> Report {
    Report {
        scenario: scenario.clone(),
        status: Status {
            ok: true,
            exit_code: EXIT_OK,
            error: None,
        },
        solver: None,
        firms: Vec::new(),
        collusion: None,
        sweep: None,
        verification: None,
    }
}

fn fail(report: &mut Report, e: &ModelError) {
    report.status = Status {
        ok: false,
        exit_code: EXIT_MODEL,
        error: Some(error_info(e)),
    };
}

/// Runs the scenario's analysis. Model errors are recorded in the report
/// (exit code 2); only an unknown verifier name is an error here.
pub fn run_scenario(scenario: &Scenario, overrides: Overrides) -> Result<Report, CliError> {
    match &scenario.analysis {
        Analysis::Solve => Ok(run_solve(scenario, overrides)),
        Analysis::Collude { p1c, delta } => Ok(run_collude(scenario, overrides, *p1c, *delta)),
        Analysis::Sweep {
            axis,
            grid,
            p1c,
            delta,
        } => {
            let points = grid.points()?;
            Ok(run_sweep(scenario, overrides, *axis, &points, *p1c, *delta))
        }
        Analysis::Verify {
            verifier,
            count,
            seed,
            tolerance,
        } => {
            let v: Verifier = verifier
                .parse()
                .map_err(|e: crate::verify::UnknownVerifier| {
                    CliError::UnknownVerifier(e.to_string())
                })?;
            let seed = overrides.seed.unwrap_or(*seed);
            let tol = overrides.tolerance.or(*tolerance);
            let summary = run_verifier(v, *count, seed, tol);
            let mut report = empty_report(scenario);
            if !summary.passed {
                report.status = Status {
                    ok: false,
                    exit_code: EXIT_VERIFY,
                    error: Some(ErrorInfo {
                        kind: "Counterexample".into(),
                        message: format!(
                            "{} of {} instances violate {}",
                            summary.failures, summary.count, summary.verifier
                        ),
                    }),
                };
            }
            report.verification = Some(summary);
            Ok(report)
        }
    }
}

/// Equilibrium only, whatever analysis the scenario requests.
pub fn run_solve(scenario: &Scenario, overrides: Overrides) -> Report {
    let mut report = empty_report(scenario);
    let tol = overrides.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let model = match Model::build(
        scenario.model,
        scenario.market.as_ref(),
        scenario.two_step.as_ref(),
    ) {
        Ok(m) => m,
        Err(e) => {
            fail(&mut report, &e);
            return report;
        }
    };
    match solve(&model, tol) {
        Ok(solved) => {
            report.firms = firm_rows(&model, &solved.nash);
            if let Some(e) = &solved.h1_error {
                fail(&mut report, e);
            }
            report.solver = Some(solved.diagnostics);
        }
        Err(e) => fail(&mut report, &e),
    }
    report
}

fn run_collude(
    scenario: &Scenario,
    overrides: Overrides,
    p1c: BottomPrice,
    delta: Option<f64>,
) -> Report {
    let mut report = empty_report(scenario);
    let tol = overrides.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let model = match Model::build(
        scenario.model,
        scenario.market.as_ref(),
        scenario.two_step.as_ref(),
    ) {
        Ok(m) => m,
        Err(e) => {
            fail(&mut report, &e);
            return report;
        }
    };
    let solved = match solve(&model, tol) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut report, &e);
            return report;
        }
    };
    report.firms = firm_rows(&model, &solved.nash);
    match collude(&model, &solved, p1c, delta) {
        Ok(coll) => {
            fill_rows(&mut report.firms, &coll);
            report.collusion = Some(coll.summary);
        }
        Err(e) => fail(&mut report, &e),
    }
    report.solver = Some(solved.diagnostics);
    report
}

/// Parameters with one axis value applied.
fn apply_axis(
    scenario: &Scenario,
    axis: SweepAxis,
    value: f64,
) -> (Option<MarketParams>, Option<TwoStepParams>) {
    let mut market = scenario.market.clone();
    let mut two = scenario.two_step;
    match axis {
        SweepAxis::P1c | SweepAxis::Delta => {}
        SweepAxis::Cost { firm } => {
            if let Some(m) = market.as_mut() {
                m.costs[firm - 1] = value;
            }
            if let Some(p) = two.as_mut() {
                p.c[firm - 1] = value;
            }
        }
        SweepAxis::Quality { firm } => {
            if let Some(m) = market.as_mut() {
                m.qualities[firm - 1] = value;
            }
            if let Some(p) = two.as_mut() {
                p.v[firm - 1] = value;
            }
        }
        SweepAxis::CostGap => {
            if let Some(m) = market.as_mut() {
                let base = m.costs[0];
                for (i, c) in m.costs.iter_mut().enumerate() {
                    *c = base + value * i as f64;
                }
            }
            if let Some(p) = two.as_mut() {
                p.c[1] = p.c[0] + value;
            }
        }
    }
    (market, two)
}

fn sweep_point(
    scenario: &Scenario,
    tol: f64,
    axis: SweepAxis,
    value: f64,
    p1c: BottomPrice,
    delta: Option<f64>,
) -> Result<Collusion, ModelError> {
    let (market, two) = apply_axis(scenario, axis, value);
    let model = Model::build(scenario.model, market.as_ref(), two.as_ref())?;
    let solved = solve(&model, tol)?;
    let (p1c, delta) = match axis {
        SweepAxis::P1c => (BottomPrice::Value(value), delta),
        SweepAxis::Delta => (p1c, Some(value)),
        _ => (p1c, delta),
    };
    collude(&model, &solved, p1c, delta)
}

fn run_sweep(
    scenario: &Scenario,
    overrides: Overrides,
    axis: SweepAxis,
    points: &[f64],
    p1c: BottomPrice,
    delta: Option<f64>,
) -> Report {
    let tol = overrides.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let firms = match scenario.model {
        ModelKind::TwoStep => 2,
        _ => scenario.market.as_ref().map_or(0, |m| m.qualities.len()),
    };
    let rows = points
        .iter()
        .map(
            |&value| match sweep_point(scenario, tol, axis, value, p1c, delta) {
                Ok(coll) => SweepRow {
                    value,
                    status: "ok".into(),
                    message: None,
                    regime: Some(coll.summary.regime),
                    p1c: Some(coll.summary.p1c),
                    delta_p: Some(coll.summary.delta_p),
                    binding_firm: coll.summary.binding_firm,
                    max_critical_delta: Some(coll.summary.max_critical_delta),
                    sustainable: coll.summary.sustainable,
                    collusive_prices: coll.collusive,
                    critical_deltas: coll.critical_deltas,
                },
                Err(e) => SweepRow {
                    value,
                    status: e.kind().to_string(),
                    message: Some(e.to_string()),
                    regime: None,
                    p1c: None,
                    delta_p: None,
                    binding_firm: None,
                    max_critical_delta: None,
                    sustainable: None,
                    collusive_prices: Vec::new(),
                    critical_deltas: Vec::new(),
                },
            },
        )
        .collect();
    let mut report = empty_report(scenario);
    report.sweep = Some(SweepTable {
        axis: axis.label(),
        firms,
        rows,
    });
    report
}
