//! Waiting-time distributions for a stream of Bernoulli rewards.
//!
//! `T` counts the negative rewards before the first positive one and is
//! geometric; `W_r` counts the negatives before the r-th positive and is the
//! sum of `r` independent copies of `T`, i.e. negative binomial.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::binomial_term;

/// Per-observation reward probabilities. Only `p` is stored; `q = 1 - p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardModel {
    p: f64,
    q: f64,
}

impl RewardModel {
    /// Rejects `p` outside the open interval (0, 1), including NaN.
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self { p, q: 1.0 - p })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The same model with the roles of positive and negative rewards swapped.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
        }
    }
}

/// Number of positive rewards `r` that ends a Rule A episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WaitingTimeSpec {
    r: u64,
}

impl WaitingTimeSpec {
    pub fn new(r: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::CountTooSmall {
                name: "r",
                min: 1,
                value: r,
            });
        }
        Ok(Self { r })
    }

    #[inline]
    pub fn r(&self) -> u64 {
        self.r
    }
}

/// `Pr[T = k] = p q^k`.
pub fn geometric_pmf(model: &RewardModel, k: u64) -> f64 {
    model.p * model.q.powf(k as f64)
}

/// Probability generating function of `W_r`, `[p / (1 - q z)]^r`, on `[0, 1]`.
pub fn pgf_eval(model: &RewardModel, spec: &WaitingTimeSpec, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::OutOfRange {
            name: "z",
            value: z,
            range: "[0, 1]",
        });
    }
    // 1 - q z written as p + q (1 - z), which is exactly p at z = 1.
    let g1 = model.p / (model.p + model.q * (1.0 - z));
    Ok(g1.powf(spec.r as f64))
}

/// `E[W_r] = r q / p`.
pub fn nb_mean(model: &RewardModel, spec: &WaitingTimeSpec) -> f64 {
    spec.r as f64 * model.q / model.p
}

/// `Var[W_r] = r q / p^2`.
pub fn nb_variance(model: &RewardModel, spec: &WaitingTimeSpec) -> f64 {
    spec.r as f64 * model.q / (model.p * model.p)
}

/// `Pr[W_r = k] = C(r + k - 1, k) p^r q^k`.
///
/// While the binomial coefficient fits in a `u128` and `p^r`, `q^k` stay in
/// the normal range the product is formed directly. Otherwise the value comes
/// from [`nb_pmf_log_space`].
pub fn nb_pmf(model: &RewardModel, spec: &WaitingTimeSpec, k: u64) -> f64 {
    nb_pmf_direct(model, spec.r, k).unwrap_or_else(|| nb_pmf_log_space(model, spec, k))
}

fn nb_pmf_direct(model: &RewardModel, r: u64, k: u64) -> Option<f64> {
    let coeff = exact_binomial(r.checked_add(k)? - 1, k)?;
    let pr = model.p.powf(r as f64);
    let qk = model.q.powf(k as f64);
    let v = coeff as f64 * pr * qk;
    (pr.is_normal() && qk.is_normal() && v.is_normal()).then_some(v)
}

/// `C(n, k)` when every intermediate of the multiplicative formula fits in a `u128`.
fn exact_binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by i + 1 at every step.
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

/// [`nb_pmf`] evaluated in log space for every `k`.
///
/// Computed as `r / (r + k)` times the binomial term `C(r + k, r) p^r q^k`,
/// with log-factorials expanded as Stirling main terms plus corrections.
/// Relative error is around 1e-14 even when `r + k` runs into the millions.
pub fn nb_pmf_log_space(model: &RewardModel, spec: &WaitingTimeSpec, k: u64) -> f64 {
    let r = spec.r;
    if k == 0 {
        return model.p.powf(r as f64);
    }
    let Some(n) = r.checked_add(k) else {
        return 0.0;
    };
    r as f64 / n as f64 * binomial_term(r, n, model.p, model.q)
}

/// `Pr[W_r <= b]` as an exact finite sum of pmf terms.
pub fn nb_cdf(model: &RewardModel, spec: &WaitingTimeSpec, b: u64) -> f64 {
    let mode = mode(model, spec);
    let mut sum = 0.0;
    for k in 0..=b {
        let term = nb_pmf(model, spec, k);
        // Past the mode terms only shrink; once they underflow the rest are zero too.
        if term == 0.0 && k > mode {
            break;
        }
        sum += term;
    }
    sum.min(1.0)
}

fn mode(model: &RewardModel, spec: &WaitingTimeSpec) -> u64 {
    if spec.r <= 1 {
        0
    } else {
        ((spec.r - 1) as f64 * model.q / model.p).floor() as u64
    }
}

/// Smallest horizon `K` such that `Pr[W_r > K] <= tol` is guaranteed.
///
/// Beyond the mode the pmf ratio `q (r + k) / (k + 1)` is nonincreasing in `k`,
/// so once it drops below one the tail past `K` is bounded by the geometric
/// series `pmf(K) * ratio / (1 - ratio)`. Used to pick truncation points; never
/// used to produce a returned probability.
pub fn tail_horizon(model: &RewardModel, spec: &WaitingTimeSpec, tol: f64) -> u64 {
    let r = spec.r as f64;
    let mut k = mode(model, spec);
    loop {
        let ratio = model.q * (r + k as f64) / (k as f64 + 1.0);
        if ratio < 1.0 {
            let bound = nb_pmf(model, spec, k) * ratio / (1.0 - ratio);
            if bound <= tol {
                return k;
            }
        }
        k += 1;
    }
}
