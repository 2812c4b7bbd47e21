//! Computational laboratory for one-shot threshold crowdfunding games.
//!
//! A population of `n` agents holds private binary signals of accuracy `p`
//! about a good of uncertain value and decides whether to pledge at price
//! `tau`. The good is provided only if at least `T = ceil(q * n)` agents
//! pledge, in which case pledgers pay and receive the good; otherwise no
//! money changes hands. The crate provides:
//!
//! - [`model`]: domain types, Bayesian posteriors, price-regime
//!   classification, and the clickcoin payoff rules.
//! - [`equilibrium`]: the symmetric Bayes-Nash equilibrium solver for the
//!   crowdfunding game, plus the large-population mixing formula.
//! - [`aggregation`]: closed-form correctness and participation indices and
//!   the behavioral-mixture calculus relating opt-in rates to information
//!   aggregation.
//! - [`simulate`]: a seeded, parallel Monte Carlo engine for voting and
//!   crowdfunding scenarios with per-agent decision logs.
//! - [`inference`]: decision classification and logistic-regression fits
//!   (IRLS) with odds ratios, Wald intervals, and likelihood-ratio tests.

pub mod aggregation;
pub mod equilibrium;
pub mod error;
pub mod inference;
pub mod model;
mod numeric;
pub mod simulate;

pub use error::{Error, Result};
