//! Normal approximation to the tail of `W_r`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob_core::{nb_cdf, nb_mean, nb_variance, RewardModel, WaitingTimeSpec};
use crate::special::erfc_nonneg;

/// Mean and variance of the approximating normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma2: f64,
}

pub fn normal_params(model: &RewardModel, spec: &WaitingTimeSpec) -> NormalParams {
    NormalParams {
        mu: nb_mean(model, spec),
        sigma2: nb_variance(model, spec),
    }
}

/// Standard normal CDF, absolute error below 1e-15 everywhere.
///
/// The lower half is `erfc(-x / sqrt 2) / 2` and the upper half its complement,
/// so `cdf(-x) + cdf(x) == 1` up to a single rounding.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            range: "finite reals",
        });
    }
    let lower = lower_tail(-x.abs());
    Ok(if x < 0.0 { lower } else { 1.0 - lower })
}

/// `1 - Phi(x)`, computed directly so small upper tails keep their relative accuracy.
pub fn std_normal_sf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            range: "finite reals",
        });
    }
    let lower = lower_tail(-x.abs());
    Ok(if x > 0.0 { lower } else { 1.0 - lower })
}

// Phi(x) for x <= 0.
fn lower_tail(x: f64) -> f64 {
    0.5 * erfc_nonneg(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standardized bound `(b p - r q) / sqrt(r q)`, i.e. `(b - mu) / sigma`.
pub fn standardized_bound(model: &RewardModel, spec: &WaitingTimeSpec, b: u64) -> f64 {
    let rq = spec.r() as f64 * model.q();
    (b as f64 * model.p() - rq) / rq.sqrt()
}

/// Normal approximation to `Pr[W_r > b]`, without continuity correction.
pub fn tail_normal(model: &RewardModel, spec: &WaitingTimeSpec, b: u64) -> f64 {
    std_normal_sf(standardized_bound(model, spec, b))
        .expect("standardized bound is finite for valid models")
}

/// `|tail_normal - (1 - nb_cdf)|`.
pub fn approximation_error(model: &RewardModel, spec: &WaitingTimeSpec, b: u64) -> f64 {
    let exact = 1.0 - nb_cdf(model, spec, b);
    (tail_normal(model, spec, b) - exact).abs()
}
