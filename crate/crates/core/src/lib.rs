//! Price collusion in vertically differentiated markets.
//!
//! Firms sell one variant each along a quality ladder to consumers with
//! uniformly distributed taste for quality. The crate computes the Bertrand
//! equilibrium, the incentive constraints of a cartel that raises every price
//! by the same amount, and several model variants.

// Conditions are written as `!(a > b)` so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod choice;
pub mod cli;
pub mod collusion;
pub mod equilibrium;
pub mod error;
pub mod extensions;
pub mod market;
pub mod numerics;
pub mod sampling;
pub mod verify;

pub use collusion::{Cartel, CollusionReport, PayoffTriple};
pub use equilibrium::{solve_nash_direct, solve_nash_iterative, NashSolution};
pub use error::{ModelError, Result};
pub use market::{validate_market, DiscountFactor, Market, MarketParams, PriceVector};
