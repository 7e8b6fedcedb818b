//! Report documents and their self-check.
//!
//! Firm numbers in reports are 1-based. Every per-firm identity can be
//! re-derived from the report alone with [`verify_report`].

use serde::{Deserialize, Serialize};

use super::scenario::{ModelKind, Scenario};
use crate::equilibrium::H1Report;
use crate::extensions::uncovered::{r_term, z_term, BottomDeviation};
use crate::verify::VerifySummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    /// Error variant, e.g. `QualityOrderViolation` or `H1Failed`.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub ok: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// `tridiagonal` for the additive models, `closed_form` for the two-step duopoly.
    pub method: String,
    /// Marginal consumers at the equilibrium.
    pub thetas: Vec<f64>,
    /// Largest gap between a price and the firm's best response to the others.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_response_residual: Option<f64>,
    /// Rounds used by the best-response cross-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Largest price gap between the cross-check and the reported solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterative_discrepancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<H1Report>,
}

/// One firm: equilibrium quantities, then collusion quantities when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRow {
    pub firm: usize,
    pub quality: f64,
    pub cost: f64,
    pub price: f64,
    pub margin: f64,
    pub share: f64,
    pub profit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collusive_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collusive_profit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_profit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Every taste buys; the cartel raises all prices by the same amount.
    Covered,
    /// Low tastes drop out; each firm keeps a fixed fraction of its demand.
    Uncovered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncoveredDetails {
    pub s: f64,
    pub thresholds: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bottom_deviation: BottomDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollusionSummary {
    pub regime: Regime,
    pub p1c: f64,
    pub delta_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// 1-based; absent at zero uplift.
    pub binding_firm: Option<usize>,
    pub max_critical_delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sustainable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncovered: Option<UncoveredDetails>,
}

/// One sweep grid point. Failing points carry the error kind in `status`
/// and leave the result fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub message: Option<String>,
    pub regime: Option<Regime>,
    pub p1c: Option<f64>,
    pub delta_p: Option<f64>,
    pub binding_firm: Option<usize>,
    pub max_critical_delta: Option<f64>,
    pub sustainable: Option<bool>,
    pub collusive_prices: Vec<f64>,
    pub critical_deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub firms: usize,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub firms: Vec<FirmRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collusion: Option<CollusionSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifySummary>,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Re-derives the per-firm identities from a parsed report: profit equals
/// margin times share, the critical factor matches its closed form for the
/// model and regime, and `Omega` matches the payoffs at the stated `delta`.
pub fn verify_report(report: &Report, tol: f64) -> Result<(), String> {
    let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(what) };
    let n = match (&report.scenario.market, report.scenario.model) {
        (_, ModelKind::TwoStep) => 2,
        (Some(m), _) => m.qualities.len(),
        (None, _) => 0,
    };
    if !report.firms.is_empty() {
        check(
            report.firms.len() == n,
            format!("{} firm rows for {n} firms", report.firms.len()),
        )?;
    }
    for row in &report.firms {
        check(
            close(row.price - row.cost, row.margin, tol),
            format!("firm {}: margin is not price minus cost", row.firm),
        )?;
        check(
            close(row.margin * row.share, row.profit, tol),
            format!("firm {}: profit is not margin times share", row.firm),
        )?;
    }
    let Some(coll) = &report.collusion else {
        return Ok(());
    };
    let v1 = report.firms.first().map_or(1.0, |r| r.quality);
    let dp = coll.delta_p;
    for (i, row) in report.firms.iter().enumerate() {
        let Some(d) = row.critical_delta else {
            return Err(format!("firm {}: missing critical factor", row.firm));
        };
        let expected = match (report.scenario.model, &coll.uncovered) {
            (_, Some(u)) => {
                if i == 0 && u.bottom_deviation == BottomDeviation::LeavesUncovered {
                    None
                } else {
                    let q = 0.25 * dp * dp;
                    let z = z_term(u.s, row.margin, dp, u.x[i], u.y[i]);
                    let r = r_term(row.margin, dp, u.y[i]);
                    Some((q + z) / (q + r))
                }
            }
            (ModelKind::Hackner, None) => Some(closed_form(v1 * dp, row.quality * row.margin)),
            (_, None) => Some(closed_form(dp, row.margin)),
        };
        if let Some(e) = expected {
            check(
                close(d, e, tol),
                format!(
                    "firm {}: critical factor {d} differs from closed form {e}",
                    row.firm
                ),
            )?;
        }
        if let (Some(delta), Some(omega), Some(pc), Some(pd)) = (
            coll.delta,
            row.omega,
            row.collusive_profit,
            row.deviation_profit,
        ) {
            let e = pc - (1.0 - delta) * pd - delta * row.profit;
            check(
                close(omega, e, tol),
                format!("firm {}: omega {omega} differs from payoffs {e}", row.firm),
            )?;
        }
    }
    if let Some(delta) = coll.delta {
        let max = report
            .firms
            .iter()
            .filter_map(|r| r.critical_delta)
            .fold(0.0, f64::max);
        check(
            coll.sustainable == Some(max <= delta),
            "sustainable flag disagrees with the critical factors".into(),
        )?;
    }
    Ok(())
}

fn closed_form(dp: f64, margin: f64) -> f64 {
    crate::collusion::critical_delta_closed_form(dp, margin)
}
