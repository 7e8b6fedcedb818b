//! Scenario files: a model variant, its parameters and one analysis request.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::extensions::two_step::TwoStepParams;
use crate::market::MarketParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Additive utility `theta v - p` with uniform tastes.
    Core,
    /// Quality-scaled utility `v (theta - p)`.
    Hackner,
    /// Duopoly with a two-step taste density.
    TwoStep,
}

/// Bottom collusive price: a number or `"max"` for the largest admissible value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BottomPrice {
    Value(f64),
    Named(Max),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Max {
    Max,
}

impl BottomPrice {
    pub const MAX: BottomPrice = BottomPrice::Named(Max::Max);
}

impl Default for BottomPrice {
    fn default() -> Self {
        BottomPrice::MAX
    }
}

/// Quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    P1c,
    Delta,
    /// One cost entry, by 1-based firm number.
    Cost {
        firm: usize,
    },
    /// One quality entry, by 1-based firm number.
    Quality {
        firm: usize,
    },
    /// Uniform cost step `g`: costs become `c_1 + g (i - 1)`.
    CostGap,
}

impl SweepAxis {
    pub fn label(&self) -> String {
        match self {
            SweepAxis::P1c => "p1c".into(),
            SweepAxis::Delta => "delta".into(),
            SweepAxis::Cost { firm } => format!("cost_{firm}"),
            SweepAxis::Quality { firm } => format!("quality_{firm}"),
            SweepAxis::CostGap => "cost_gap".into(),
        }
    }
}

/// Grid of axis values: either explicit `values` or `steps` equal intervals
/// from `from` to `to` (so `steps + 1` points). Generated points are rounded
/// to 15 significant digits so that, say, 0.05 + 7 * 0.05 prints as 0.4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Grid {
    /// Grid points in ascending order.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let mut pts = match (&self.values, self.from, self.to, self.steps) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(CliError::schema(
                        "analysis.grid.values",
                        "must not be empty",
                    ));
                }
                v.clone()
            }
            (None, Some(a), Some(b), Some(k)) => {
                if k == 0 {
                    return Err(CliError::schema(
                        "analysis.grid.steps",
                        "must be at least 1",
                    ));
                }
                (0..=k)
                    .map(|j| {
                        if j == k {
                            b
                        } else {
                            round_sig(a + (b - a) * j as f64 / k as f64)
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(CliError::schema(
                    "analysis.grid",
                    "give either `values` or all of `from`, `to`, `steps`",
                ))
            }
        };
        if let Some(bad) = pts.iter().find(|x| !x.is_finite()) {
            return Err(CliError::schema(
                "analysis.grid",
                &format!("non-finite grid value {bad}"),
            ));
        }
        pts.sort_by(f64::total_cmp);
        Ok(pts)
    }
}

fn round_sig(x: f64) -> f64 {
    format!("{x:.14e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    Solve,
    Collude {
        #[serde(default)]
        p1c: BottomPrice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Sweep {
        axis: SweepAxis,
        grid: Grid,
        #[serde(default)]
        p1c: BottomPrice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Verify {
        verifier: String,
        count: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Solve => "solve",
            Analysis::Collude { .. } => "collude",
            Analysis::Sweep { .. } => "sweep",
            Analysis::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelKind,
    /// Parameters for `core` and `hackner`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketParams>,
    /// Parameters for `two_step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_step: Option<TwoStepParams>,
    pub analysis: Analysis,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        scenario.check_fields()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that the parameter block matching `model` is present. Verify
    /// requests draw their own markets and need neither.
    fn check_fields(&self) -> Result<(), CliError> {
        if matches!(self.analysis, Analysis::Verify { .. }) {
            return Ok(());
        }
        match self.model {
            ModelKind::Core | ModelKind::Hackner => {
                if self.market.is_none() {
                    return Err(CliError::schema("market", "required for this model"));
                }
                if self.two_step.is_some() {
                    return Err(CliError::schema(
                        "two_step",
                        "only valid with model two_step",
                    ));
                }
            }
            ModelKind::TwoStep => {
                if self.two_step.is_none() {
                    return Err(CliError::schema("two_step", "required for model two_step"));
                }
                if self.market.is_some() {
                    return Err(CliError::schema("market", "not used by model two_step"));
                }
            }
        }
        if let Analysis::Sweep { axis, grid, .. } = &self.analysis {
            grid.points()?;
            if let SweepAxis::Cost { firm } | SweepAxis::Quality { firm } = axis {
                let n = match (&self.market, self.model) {
                    (_, ModelKind::TwoStep) => 2,
                    (Some(m), _) => m.qualities.len(),
                    (None, _) => 0,
                };
                if *firm == 0 || *firm > n {
                    return Err(CliError::schema(
                        "analysis.axis.firm",
                        &format!("firm {firm} out of range 1..={n}"),
                    ));
                }
            }
        }
        Ok(())
    }
}
