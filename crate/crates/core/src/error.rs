use thiserror::Error;

/// Errors raised by the model, solvers and collusion analysis.
///
/// Firm and entry indices are zero-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("at least two firms are required, got {n}")]
    TooFewFirms { n: usize },

    #[error("qualities and costs differ in length ({qualities} vs {costs})")]
    LengthMismatch { qualities: usize, costs: usize },

    #[error("{name} must be positive and finite, got {value}")]
    NonpositiveParameter { name: String, value: f64 },

    #[error("qualities must be strictly increasing: v[{index}]={value} is not greater than v[{prev}]={prev_value}", prev = .index - 1)]
    QualityOrderViolation {
        index: usize,
        value: f64,
        prev_value: f64,
    },

    #[error("costs must be weakly increasing: c[{index}]={value} is below c[{prev}]={prev_value}", prev = .index - 1)]
    CostOrderViolation {
        index: usize,
        value: f64,
        prev_value: f64,
    },

    #[error("taste interval requires theta_lo < theta_hi, got [{theta_lo}, {theta_hi}]")]
    IntervalViolation { theta_lo: f64, theta_hi: f64 },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("firm {firm} expects {expected} neighbour price(s), got {got}")]
    WrongNeighborArity {
        firm: usize,
        expected: usize,
        got: usize,
    },

    #[error("price vector has {got} entries, market has {expected} firms")]
    PriceLength { expected: usize, got: usize },

    #[error("discount factor must lie in (0, 1), got {0}")]
    InvalidDiscountFactor(f64),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("best-response iteration did not converge within {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("tridiagonal system is singular: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("interiority/coverage condition fails: {0}")]
    H1Failed(String),

    #[error("bottom collusive price {p1c} outside admissible range [{lo}, {hi}]")]
    P1cOutOfRange { p1c: f64, lo: f64, hi: f64 },

    #[error("zero collusive uplift: the critical discount factor ratio is 0/0")]
    ZeroUplift,

    #[error("corollary baseline invalid: {0}")]
    BaselineInvalid(String),

    #[error("two-step premise violated: {0}")]
    ThresholdViolated(String),

    #[error("two-step mass must lie in (0, 1) and differ from 1/2, got {0}")]
    InvalidMass(f64),
}

impl ModelError {
    /// Stable variant name used in reports and by the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::TooFewFirms { .. } => "TooFewFirms",
            ModelError::LengthMismatch { .. } => "LengthMismatch",
            ModelError::NonpositiveParameter { .. } => "NonpositiveParameter",
            ModelError::QualityOrderViolation { .. } => "QualityOrderViolation",
            ModelError::CostOrderViolation { .. } => "CostOrderViolation",
            ModelError::IntervalViolation { .. } => "IntervalViolation",
            ModelError::IndexOutOfRange { .. } => "IndexOutOfRange",
            ModelError::WrongNeighborArity { .. } => "WrongNeighborArity",
            ModelError::PriceLength { .. } => "PriceLength",
            ModelError::InvalidDiscountFactor(_) => "InvalidDiscountFactor",
            ModelError::InvalidTolerance(_) => "InvalidTolerance",
            ModelError::NoConvergence { .. } => "NoConvergence",
            ModelError::SingularSystem { .. } => "SingularSystem",
            ModelError::H1Failed(_) => "H1Failed",
            ModelError::P1cOutOfRange { .. } => "P1cOutOfRange",
            ModelError::ZeroUplift => "ZeroUplift",
            ModelError::BaselineInvalid(_) => "BaselineInvalid",
            ModelError::ThresholdViolated(_) => "ThresholdViolated",
            ModelError::InvalidMass(_) => "InvalidMass",
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
