//! Oracles and grid checks shared by the integration suites.
//!
//! Nothing here calls into the library's numerics for the value under test:
//! the recurrence pmf, the path enumeration and the erfc reference are
//! independent computations.

#![allow(dead_code)]

use stoprule::normal_approx::{std_normal_cdf, tail_normal};
use stoprule::prob_core::{
    geometric_pmf, nb_mean, nb_pmf, nb_pmf_log_space, nb_variance, pgf_eval, tail_horizon,
    RewardModel, WaitingTimeSpec,
};
use stoprule::rule_b::{success_prob, win_prob_at, RuleBConfig};

pub const P_GRID: [f64; 7] = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95];
pub const R_GRID: [u64; 6] = [1, 2, 5, 10, 20, 50];
// Forward difference truncation is about h/2 * (mean + var/mean) relative,
// which stays under 1e-4 only for moderate means.
pub const PGF_P_GRID: [f64; 4] = [0.3, 0.5, 0.7, 0.9];
pub const PGF_R_GRID: [u64; 4] = [1, 5, 20, 50];

pub type Check = Result<(), String>;

pub fn model(p: f64) -> RewardModel {
    RewardModel::new(p).unwrap()
}

pub fn spec(r: u64) -> WaitingTimeSpec {
    WaitingTimeSpec::new(r).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `Pr[W_r = k]` for `k = 0..=kmax` by the ratio `q (r + k - 1) / k`.
pub fn recurrence_pmf(p: f64, r: u64, kmax: u64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(kmax as usize + 1);
    let mut v = p.powi(r as i32);
    out.push(v);
    for k in 1..=kmax {
        v *= q * (r + k - 1) as f64 / k as f64;
        out.push(v);
    }
    out
}

/// Positive side's win probability by walking every observation sequence
/// until one side holds `2m + 1`.
pub fn enumerate_success(m: u64, p: f64) -> f64 {
    fn walk(pos: u64, neg: u64, h: u64, weight: f64, p: f64, q: f64) -> f64 {
        if pos == h {
            return weight;
        }
        if neg == h {
            return 0.0;
        }
        walk(pos + 1, neg, h, weight * p, p, q) + walk(pos, neg + 1, h, weight * q, p, q)
    }
    walk(0, 0, 2 * m + 1, 1.0, p, 1.0 - p)
}

/// Number of finished sequences, by winner.
pub fn count_games(m: u64) -> (u64, u64) {
    fn walk(pos: u64, neg: u64, h: u64, acc: &mut (u64, u64)) {
        if pos == h {
            acc.0 += 1;
        } else if neg == h {
            acc.1 += 1;
        } else {
            walk(pos + 1, neg, h, acc);
            walk(pos, neg + 1, h, acc);
        }
    }
    let mut acc = (0, 0);
    walk(0, 0, 2 * m + 1, &mut acc);
    acc
}

pub fn check_normalization(p: f64, r: u64) -> Check {
    let (m, s) = (model(p), spec(r));
    let horizon = tail_horizon(&m, &s, 1e-12);
    let mut total = 0.0;
    for k in 0..=horizon {
        total += nb_pmf(&m, &s, k);
        if !(0.0..=1.0).contains(&total) {
            return Err(format!("p={p} r={r}: partial sum {total} at K={k}"));
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("p={p} r={r}: sum to K={horizon} is {total}"));
    }
    Ok(())
}

pub fn check_geometric_reduction(p: f64) -> Check {
    let m = model(p);
    for k in 0..=200 {
        let (a, b) = (nb_pmf(&m, &spec(1), k), geometric_pmf(&m, k));
        if rel_err(a, b) > 1e-15 {
            return Err(format!("p={p} k={k}: {a:e} vs {b:e}"));
        }
    }
    Ok(())
}

/// The recurrence against the log-space path over `k <= 10 r`, skipping
/// values too small to carry full precision.
pub fn check_dual_computation(p: f64, r: u64) -> Check {
    let (m, s) = (model(p), spec(r));
    for (k, want) in recurrence_pmf(p, r, 10 * r).into_iter().enumerate() {
        if want < 1e-280 {
            continue;
        }
        let got = nb_pmf_log_space(&m, &s, k as u64);
        if rel_err(got, want) > 1e-12 {
            return Err(format!("p={p} r={r} k={k}: {got:e} vs {want:e}"));
        }
    }
    Ok(())
}

pub fn check_moments(p: f64, r: u64) -> Check {
    let (m, s) = (model(p), spec(r));
    // A 1e-12 probability tail still carries about K^2 * 1e-12 of the second
    // moment, so the sums run until the moment contributions are negligible.
    let horizon = tail_horizon(&m, &s, 1e-16);
    let pmf: Vec<f64> = (0..=horizon).map(|k| nb_pmf(&m, &s, k)).collect();
    let mean: f64 = pmf.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let var: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 - mean).powi(2) * v)
        .sum();
    let (want_mean, want_var) = (nb_mean(&m, &s), nb_variance(&m, &s));
    if rel_err(mean, want_mean) > 1e-9 || rel_err(var, want_var) > 1e-9 {
        return Err(format!(
            "p={p} r={r}: mean {mean} vs {want_mean}, variance {var} vs {want_var}"
        ));
    }
    Ok(())
}

pub fn check_pgf_derivative(p: f64, r: u64) -> Check {
    let (m, s) = (model(p), spec(r));
    let h = 1e-6;
    let slope = (pgf_eval(&m, &s, 1.0).unwrap() - pgf_eval(&m, &s, 1.0 - h).unwrap()) / h;
    let want = nb_mean(&m, &s);
    if rel_err(slope, want) > 1e-4 {
        return Err(format!("p={p} r={r}: slope {slope} vs mean {want}"));
    }
    Ok(())
}

pub fn check_pgf_root(p: f64, r: u64) -> Check {
    let m = model(p);
    for i in 0..=20 {
        let z = i as f64 / 20.0;
        let root = pgf_eval(&m, &spec(r), z).unwrap().powf(1.0 / r as f64);
        let single = pgf_eval(&m, &spec(1), z).unwrap();
        if rel_err(root, single) > 1e-12 {
            return Err(format!("p={p} r={r} z={z}: {root} vs {single}"));
        }
    }
    Ok(())
}

pub fn check_complement_symmetry(m: u64, p: f64) -> Check {
    let cfg = RuleBConfig::new(m).unwrap();
    let total = success_prob(&cfg, &model(p)) + success_prob(&cfg, &model(1.0 - p));
    if (total - 1.0).abs() > 1e-12 {
        return Err(format!("m={m} p={p}: P_m(p) + P_m(1-p) = {total}"));
    }
    Ok(())
}

pub fn check_enumeration(m: u64, p: f64) -> Check {
    let cfg = RuleBConfig::new(m).unwrap();
    let (got, want) = (success_prob(&cfg, &model(p)), enumerate_success(m, p));
    if (got - want).abs() > 1e-12 {
        return Err(format!("m={m} p={p}: {got} vs enumerated {want}"));
    }
    Ok(())
}

pub fn check_win_prob_sum(m: u64, p: f64) -> Check {
    let (cfg, md) = (RuleBConfig::new(m).unwrap(), model(p));
    let fs: Vec<f64> = (0..=2 * m)
        .map(|k| win_prob_at(&cfg, &md, k).unwrap())
        .collect();
    if let Some(k) = fs.iter().position(|f| *f < 0.0) {
        return Err(format!("m={m} p={p}: f_{k} negative"));
    }
    let total: f64 = fs.iter().sum();
    let want = success_prob(&cfg, &md);
    if (total - want).abs() > 1e-12 {
        return Err(format!("m={m} p={p}: sum of f_k {total} vs {want}"));
    }
    Ok(())
}

pub fn check_phi_symmetry() -> Check {
    for i in 0..=1600 {
        let x = i as f64 / 200.0;
        let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
        if (s - 1.0).abs() > 1e-12 {
            return Err(format!("x={x}: sum {s}"));
        }
    }
    Ok(())
}

pub fn check_tail_normal_decreasing(p: f64, r: u64) -> Check {
    let (m, s) = (model(p), spec(r));
    let mut prev = tail_normal(&m, &s, 0);
    for b in 1..=(20 * r).max(100) {
        let t = tail_normal(&m, &s, b);
        // Past ~38 sigma both sides are exactly zero.
        if t >= prev && prev > 0.0 {
            return Err(format!("p={p} r={r}: tail at b={b} is {t}, at b-1 {prev}"));
        }
        prev = t;
    }
    Ok(())
}

/// Runs `check` over `cases` and collects the failures.
pub fn sweep<T: Copy>(cases: impl IntoIterator<Item = T>, check: impl Fn(T) -> Check) -> Check {
    let failures: Vec<String> = cases.into_iter().filter_map(|c| check(c).err()).collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures.join("; "))
    }
}

pub fn grid() -> impl Iterator<Item = (f64, u64)> {
    P_GRID
        .into_iter()
        .flat_map(|p| R_GRID.into_iter().map(move |r| (p, r)))
}

pub fn pgf_grid() -> impl Iterator<Item = (f64, u64)> {
    PGF_P_GRID
        .into_iter()
        .flat_map(|p| PGF_R_GRID.into_iter().map(move |r| (p, r)))
}
