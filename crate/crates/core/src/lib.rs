//! Sequential forecasts that stay unbiased conditional on decision-relevant
//! events, plus a harness that measures the swap regret of agents who act on
//! them.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] and [`transcript`]: the prediction grid, forecast
//!   distributions and the per-round record.
//! * [`events`]: interval, convex-polygon, best-response and logistic-bucket
//!   event families.
//! * [`agents`]: utilities, response models, the utility cover, swap regret.
//! * [`forecaster`]: exponential weights over signed (event, coordinate)
//!   experts and the per-round minmax solve.
//! * [`adversaries`], [`metrics`], [`harness`]: outcome generators, bias and
//!   calibration metrics, configuration and the run loop.

pub mod adversaries;
pub mod agents;
pub mod error;
pub mod events;
pub mod forecaster;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod transcript;

pub use error::{Error, Result};
