//! Model variants: an uncovered market, a two-step taste distribution and
//! quality-scaled utility.

pub mod hackner;
pub mod two_step;
pub mod uncovered;

pub use hackner::{hackner_collusion, hackner_nash, HacknerMarket};
pub use two_step::{twostep_critical_deltas, twostep_nash, TwoStepParams};
pub use uncovered::{
    uncovered_collusive_prices, uncovered_critical_delta, uncovered_monotonicity_holds,
    UncoveredReport,
};
