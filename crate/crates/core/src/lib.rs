//! Train-car crowding toolkit.
//!
//! Two halves live here. [`vibration`] models the vertical carbody response to
//! track irregularities and how it shifts with passenger load, which is the
//! physical basis for an accelerometer passenger counter. The rest of the crate
//! ([`transit`], [`simulator`], [`estimator`], [`harness`]) simulates a rail line
//! with per-car boarding and predicts per-car crowding at the next station from
//! noisy on-board counts using Poisson priors and Metropolis-Hastings.

pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod seed;
pub mod simulator;
pub mod stats;
pub mod transit;
pub mod vibration;

pub use error::{Error, Result};
