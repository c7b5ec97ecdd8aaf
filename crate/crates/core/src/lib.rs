//! Non-probabilistic odds forecasting.
//!
//! A forecaster who believes a posterior model should be willing to take
//! bets at the odds it issues without expecting ruin. This crate computes
//! the least-excess odds that keep a fully informed client's (log-)wealth a
//! martingale, for Bernoulli-count, Gaussian and sampled posteriors, and
//! applies them to the betting game itself, to hedging and loss mitigation,
//! and to an ensemble temperature forecasting campaign.
//!
//! Module map:
//! - [`numerics`]: special functions, quadrature, scalar minimisation, RNG streams.
//! - [`odds`]: odds assignments and the odds engines.
//! - [`game`]: the forecaster/client/nature game and martingale checks.
//! - [`decisions`]: investment hedging and loss mitigation with odds.
//! - [`pipeline`]: ensemble-forecast odds workflow on synthetic or CSV data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decisions;
pub mod error;
pub mod game;
pub mod numerics;
pub mod odds;
pub mod pipeline;

pub use error::{OddsError, Result};
pub use numerics::RngStream;
pub use odds::{OddsAssignment, Provenance, Utility};
