//! Rule A: stop after `r` positive rewards, then judge the episode by the
//! ratio of negatives to positives.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal_approx::{approximation_error, tail_normal};
use crate::prob_core::{nb_cdf, nb_mean, RewardModel, WaitingTimeSpec};
use crate::Conclusion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleAConfig {
    r: u64,
    rho_star: f64,
}

impl RuleAConfig {
    /// `r >= 1` positives end the episode; it succeeds iff `W / r < rho_star`,
    /// with `rho_star` in (0, 1].
    pub fn new(r: u64, rho_star: f64) -> Result<Self> {
        WaitingTimeSpec::new(r)?;
        if !(rho_star > 0.0 && rho_star <= 1.0) {
            return Err(Error::OutOfRange {
                name: "rho_star",
                value: rho_star,
                range: "(0, 1]",
            });
        }
        Ok(Self { r, rho_star })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    pub fn waiting_time(&self) -> WaitingTimeSpec {
        WaitingTimeSpec::new(self.r).expect("validated at construction")
    }
}

/// Cost of a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    c: f64,
}

impl CostModel {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::OutOfRange {
                name: "c",
                value: c,
                range: "(0, inf)",
            });
        }
        Ok(Self { c })
    }

    pub fn per_observation(&self) -> f64 {
        self.c
    }
}

/// How the tolerated count of negative rewards `b` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BoundSpec {
    /// `b` given directly.
    Absolute(u64),
    /// `b = round(E[W_r] + d)`, `d > 0`.
    Additive(f64),
    /// `b = round(alpha * E[W_r])`, `alpha >= 1`.
    Multiplicative(f64),
}

impl BoundSpec {
    pub fn absolute(b: u64) -> Self {
        Self::Absolute(b)
    }

    pub fn additive(d: f64) -> Result<Self> {
        let spec = Self::Additive(d);
        spec.validate()?;
        Ok(spec)
    }

    pub fn multiplicative(alpha: f64) -> Result<Self> {
        let spec = Self::Multiplicative(alpha);
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Absolute(_) => Ok(()),
            Self::Additive(d) if d > 0.0 && d.is_finite() => Ok(()),
            Self::Additive(d) => Err(Error::OutOfRange {
                name: "d",
                value: d,
                range: "(0, inf)",
            }),
            Self::Multiplicative(a) if a >= 1.0 && a.is_finite() => Ok(()),
            Self::Multiplicative(a) => Err(Error::OutOfRange {
                name: "alpha",
                value: a,
                range: "[1, inf)",
            }),
        }
    }
}

/// Everything Rule A says about one parameter set and cost bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleAReport {
    pub expected_negatives: f64,
    pub resolved_bound: u64,
    pub exceedance_exact: f64,
    pub exceedance_approx: f64,
    pub approx_error: f64,
    pub min_cost: f64,
    pub max_cost_at_bound: f64,
}

/// Expected negatives per positive, `q / p`.
pub fn rewards_ratio(model: &RewardModel) -> f64 {
    model.q() / model.p()
}

/// Success iff `W / r < rho_star`; the boundary counts as failure.
pub fn classify_outcome(negatives: u64, config: &RuleAConfig) -> Conclusion {
    if (negatives as f64) / (config.r as f64) < config.rho_star {
        Conclusion::Success
    } else {
        Conclusion::Failure
    }
}

/// Point estimate `r / (r + W)` of `p` from a completed episode.
pub fn estimate_p(negatives: u64, r: u64) -> Result<f64> {
    WaitingTimeSpec::new(r)?;
    Ok(r as f64 / (r as f64 + negatives as f64))
}

/// Nearest integer with halves rounded up.
///
/// Values within 1e-9 (relative) of a half-integer are treated as that half, so
/// `1.5 * E[W_r]` lands on `7.5` even when `q = 1 - p` is not exact in binary.
fn round_half_up(x: f64) -> f64 {
    let doubled = 2.0 * x;
    let nearest_half = doubled.round();
    let x = if (doubled - nearest_half).abs() <= 1e-9 * doubled.abs().max(1.0) {
        nearest_half / 2.0
    } else {
        x
    };
    (x + 0.5).floor()
}

pub fn resolve_bound(spec: &BoundSpec, model: &RewardModel, config: &RuleAConfig) -> Result<u64> {
    spec.validate()?;
    let mean = nb_mean(model, &config.waiting_time());
    let raw = match *spec {
        BoundSpec::Absolute(b) => return Ok(b),
        BoundSpec::Additive(d) => mean + d,
        BoundSpec::Multiplicative(alpha) => alpha * mean,
    };
    let b = round_half_up(raw);
    if b < 0.0 {
        return Err(Error::NegativeBound(b));
    }
    Ok(b as u64)
}

/// `P_b = Pr[W_r > b]` from the exact distribution.
pub fn exceedance_exact(model: &RewardModel, config: &RuleAConfig, b: u64) -> f64 {
    1.0 - nb_cdf(model, &config.waiting_time(), b)
}

/// Normal approximation to `P_b`.
pub fn exceedance_approx(model: &RewardModel, config: &RuleAConfig, b: u64) -> f64 {
    tail_normal(model, &config.waiting_time(), b)
}

pub fn episode_cost(observations: u64, costs: &CostModel) -> f64 {
    observations as f64 * costs.c
}

/// Probability that a Rule A episode concludes in success.
pub fn success_probability(model: &RewardModel, config: &RuleAConfig) -> f64 {
    // Smallest W classified as failure; W = 0 always succeeds since rho_star > 0.
    let mut first_failure = (config.rho_star * config.r as f64).ceil().max(1.0) as u64;
    while classify_outcome(first_failure, config) == Conclusion::Success {
        first_failure += 1;
    }
    while first_failure > 1 && classify_outcome(first_failure - 1, config) == Conclusion::Failure {
        first_failure -= 1;
    }
    nb_cdf(model, &config.waiting_time(), first_failure - 1)
}

pub fn analyze_rule_a(
    model: &RewardModel,
    config: &RuleAConfig,
    costs: &CostModel,
    spec: &BoundSpec,
) -> Result<RuleAReport> {
    let b = resolve_bound(spec, model, config)?;
    let exact = exceedance_exact(model, config, b);
    let approx = exceedance_approx(model, config, b);
    Ok(RuleAReport {
        expected_negatives: nb_mean(model, &config.waiting_time()),
        resolved_bound: b,
        exceedance_exact: exact,
        exceedance_approx: approx,
        approx_error: approximation_error(model, &config.waiting_time(), b),
        min_cost: episode_cost(config.r, costs),
        max_cost_at_bound: episode_cost(config.r.saturating_add(b), costs),
    })
}
