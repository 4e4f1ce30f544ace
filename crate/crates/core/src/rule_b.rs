//! Rule B: positives and negatives race to `h = 2m + 1`; the episode succeeds
//! iff the positive side gets there first.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob_core::{nb_pmf, RewardModel, WaitingTimeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleBConfig {
    m: u64,
}

impl RuleBConfig {
    pub fn new(m: u64) -> Result<Self> {
        // 4m + 1 observations must fit in a u64.
        if m > (u64::MAX - 1) / 4 {
            return Err(Error::OutOfRange {
                name: "m",
                value: m as f64,
                range: "[0, (2^64 - 2) / 4]",
            });
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Winning score, always odd.
    pub fn h(&self) -> u64 {
        2 * self.m + 1
    }
}

/// Probability that the positive side wins exactly at observation `observation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthProb {
    pub k: u64,
    pub observation: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleBReport {
    pub success_prob: f64,
    pub failure_prob: f64,
    pub length_min: u64,
    pub length_max: u64,
    pub per_length_probs: Vec<LengthProb>,
}

/// `f_k = C(4m - k, 2m) p^(2m+1) q^(2m-k)`: the positive side wins at
/// observation `4m + 1 - k`, having lost `2m - k` times on the way.
///
/// This is the negative binomial probability of exactly `2m - k` negatives
/// before the `h`-th positive, and is evaluated through that route.
pub fn win_prob_at(config: &RuleBConfig, model: &RewardModel, k: u64) -> Result<f64> {
    let max = 2 * config.m;
    if k > max {
        return Err(Error::IndexOutOfRange { k, max });
    }
    let spec = WaitingTimeSpec::new(config.h())?;
    Ok(nb_pmf(model, &spec, max - k))
}

/// `P_m`, the probability that the positive side reaches `h` first.
///
/// The less likely side is summed and the other obtained as its complement,
/// so values near 1 keep their resolution.
pub fn success_prob(config: &RuleBConfig, model: &RewardModel) -> f64 {
    if model.p() > 0.5 {
        1.0 - win_sum(config, &model.swapped())
    } else {
        win_sum(config, model)
    }
}

pub fn failure_prob(config: &RuleBConfig, model: &RewardModel) -> f64 {
    if model.p() > 0.5 {
        win_sum(config, &model.swapped())
    } else {
        1.0 - win_sum(config, model)
    }
}

fn win_sum(config: &RuleBConfig, model: &RewardModel) -> f64 {
    let spec = WaitingTimeSpec::new(config.h()).expect("h >= 1");
    // Summed from the shortest game upwards, i.e. f_{2m} down to f_0.
    (0..=2 * config.m)
        .map(|losses| nb_pmf(model, &spec, losses))
        .sum()
}

/// Shortest and longest possible game, `(2m + 1, 4m + 1)`.
pub fn episode_length_range(config: &RuleBConfig) -> (u64, u64) {
    (config.h(), 4 * config.m + 1)
}

pub fn analyze_rule_b(config: &RuleBConfig, model: &RewardModel) -> RuleBReport {
    let (length_min, length_max) = episode_length_range(config);
    let per_length_probs = (0..=2 * config.m)
        .map(|k| LengthProb {
            k,
            observation: length_max - k,
            probability: win_prob_at(config, model, k).expect("k within range"),
        })
        .collect();
    let success_prob = success_prob(config, model);
    RuleBReport {
        success_prob,
        failure_prob: 1.0 - success_prob,
        length_min,
        length_max,
        per_length_probs,
    }
}
