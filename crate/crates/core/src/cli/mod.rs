//! Scenario-driven front end: parse a scenario, run it, render the report.
//!
//! Reports render as pretty JSON or as a CSV table (one row per firm, per
//! sweep point, or a single verifier summary row). Floats are written in
//! their shortest round-trip form, so re-parsing a report is lossless.

pub mod pipeline;
pub mod report;
pub mod scenario;

use std::fmt;

pub use pipeline::{run_scenario, run_solve, Overrides};
pub use report::{verify_report, Report};
pub use scenario::{Analysis, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// The scenario does not match the schema; the message names the field.
    Schema(String),
    Io(String),
    UnknownVerifier(String),
}

impl CliError {
    pub fn schema(field: &str, problem: &str) -> Self {
        CliError::Schema(format!("{field}: {problem}"))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "SchemaError",
            CliError::Io(_) => "IoError",
            CliError::UnknownVerifier(_) => "UnknownVerifier",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) | CliError::Io(m) | CliError::UnknownVerifier(m) => {
                write!(f, "{}: {m}", self.kind())
            }
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code
    }
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => render_csv(report),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn render_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |rec: Vec<String>| w.write_record(&rec).expect("in-memory write");
    if let Some(v) = &report.verification {
        write(
            [
                "verifier",
                "count",
                "seed",
                "tolerance",
                "passed",
                "failures",
                "discarded",
                "max_discrepancy",
            ]
            .map(String::from)
            .to_vec(),
        );
        write(vec![
            v.verifier.clone(),
            v.count.to_string(),
            v.seed.to_string(),
            num(v.tolerance),
            v.passed.to_string(),
            v.failures.to_string(),
            v.discarded.to_string(),
            opt(v.max_discrepancy),
        ]);
    } else if let Some(sw) = &report.sweep {
        let mut header: Vec<String> = [
            sw.axis.as_str(),
            "status",
            "message",
            "regime",
            "bottom_collusive_price",
            "delta_p",
            "binding_firm",
            "max_critical_delta",
            "sustainable",
        ]
        .map(String::from)
        .to_vec();
        header.extend((1..=sw.firms).map(|i| format!("collusive_price_{i}")));
        header.extend((1..=sw.firms).map(|i| format!("critical_delta_{i}")));
        write(header);
        for r in &sw.rows {
            let mut rec = vec![
                num(r.value),
                r.status.clone(),
                r.message.clone().unwrap_or_default(),
                r.regime
                    .map(|g| {
                        serde_json::to_value(g)
                            .expect("enum")
                            .as_str()
                            .unwrap_or("")
                            .to_string()
                    })
                    .unwrap_or_default(),
                opt(r.p1c),
                opt(r.delta_p),
                opt(r.binding_firm),
                opt(r.max_critical_delta),
                opt(r.sustainable),
            ];
            for col in [&r.collusive_prices, &r.critical_deltas] {
                rec.extend((0..sw.firms).map(|i| col.get(i).map(|&x| num(x)).unwrap_or_default()));
            }
            write(rec);
        }
    } else if !report.firms.is_empty() {
        let collude = report.collusion.is_some();
        let mut header: Vec<String> = [
            "firm", "quality", "cost", "price", "margin", "share", "profit",
        ]
        .map(String::from)
        .to_vec();
        if collude {
            header.extend(
                [
                    "collusive_price",
                    "deviation_price",
                    "collusive_profit",
                    "deviation_profit",
                    "critical_delta",
                    "omega",
                ]
                .map(String::from),
            );
        }
        write(header);
        for r in &report.firms {
            let mut rec = vec![
                r.firm.to_string(),
                num(r.quality),
                num(r.cost),
                num(r.price),
                num(r.margin),
                num(r.share),
                num(r.profit),
            ];
            if collude {
                rec.extend([
                    opt(r.collusive_price),
                    opt(r.deviation_price),
                    opt(r.collusive_profit),
                    opt(r.deviation_profit),
                    opt(r.critical_delta),
                    opt(r.omega),
                ]);
            }
            write(rec);
        }
    } else {
        write(["status", "kind", "message"].map(String::from).to_vec());
        let (kind, message) = report
            .status
            .error
            .as_ref()
            .map(|e| (e.kind.clone(), e.message.clone()))
            .unwrap_or_default();
        write(vec![report.status.exit_code.to_string(), kind, message]);
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
