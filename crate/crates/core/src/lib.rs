//! Stochastic stopping rules for learning episodes driven by Bernoulli rewards.
//!
//! * [`prob_core`]: geometric and negative binomial waiting times.
//! * [`normal_approx`]: standard normal CDF and the normal tail approximation.
//! * [`rule_a`]: stop after `r` positives; ratio-based success and cost bounds.
//! * [`rule_b`]: race of positives against negatives to `2m + 1`.
//! * [`simulator`]: seeded, partition-independent Monte Carlo validation.
//! * [`reproduce`]: recomputation of the bundled reference tables.
//! * [`cli`]: the `stoprule` command-line front end.

pub mod cli;
pub mod error;
pub mod normal_approx;
pub mod prob_core;
pub mod reproduce;
pub mod rule_a;
pub mod rule_b;
pub mod simulator;
mod special;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use prob_core::{RewardModel, WaitingTimeSpec};

/// How an episode ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conclusion {
    Success,
    Failure,
}
