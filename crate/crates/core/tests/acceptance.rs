//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//! Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stoprule::prob_core::{nb_cdf, nb_pmf};
use stoprule::reproduce::{
    reproduce_table, ReproductionReport, RowStatus, TableId, TABLE_II_TOLERANCE, TABLE_I_TOLERANCE,
};
use stoprule::rule_a::{exceedance_exact, RuleAConfig};
use stoprule::rule_b::{failure_prob, RuleBConfig};
use stoprule::simulator::{simulate, simulate_chunked, RuleConfig, SimulationConfig};

/// Seed for every Monte Carlo criterion.
const SEED: u64 = 42;
const EPISODES: u64 = 1_000_000;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    let in_budget = elapsed < budget;
    out.pass &= in_budget;
    out.summary = format!(
        "{} [{:.0?}, budget {:.0?}{}]",
        out.summary,
        elapsed,
        budget,
        if in_budget { "" } else { ", OVER" }
    );
    out
}

fn table_ii() -> Outcome {
    let report = reproduce_table(TableId::II).unwrap();
    let mut out = Outcome::new(
        report.passes() && report.cells_checked == 20,
        format!(
            "race table: {}/{} cells within {TABLE_II_TOLERANCE:e}",
            report.cells_matched, report.cells_checked
        ),
    );
    out.details = mismatch_lines(&report);
    out
}

fn mismatch_lines(report: &ReproductionReport) -> Vec<String> {
    report
        .mismatches()
        .map(|(row, cell)| {
            format!(
                "{} {}: printed {} recomputed {:.6}",
                row.label, cell.column, cell.printed, cell.recomputed
            )
        })
        .collect()
}

fn table_i() -> Outcome {
    let report = reproduce_table(TableId::I).unwrap();
    let normal: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.status == RowStatus::Normal)
        .collect();
    let column = |name: &str| {
        let cells: Vec<_> = normal
            .iter()
            .flat_map(|r| r.cells.iter().filter(|c| c.column == name))
            .collect();
        (cells.iter().filter(|c| c.pass).count(), cells.len())
    };
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["E[W_r]", "P_b'", "P_b", "Err"] {
        let (ok, n) = column(name);
        pass &= ok == n;
        details.push(format!(
            "{} column {name}: {ok}/{n} rows within {TABLE_I_TOLERANCE:e}",
            if ok == n { "PASS" } else { "FAIL" }
        ));
    }
    details.extend(
        mismatch_lines(&report)
            .into_iter()
            .map(|l| format!("  {l}")),
    );
    let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
    let err_misses: Vec<_> = report
        .mismatches()
        .filter(|(_, c)| c.column == "Err")
        .collect();
    if !err_misses.is_empty() {
        let explained = err_misses
            .iter()
            .filter(|(row, cell)| {
                let value = |name| {
                    row.cells
                        .iter()
                        .find(|c| c.column == name)
                        .unwrap()
                        .recomputed
                };
                let gap = round3((round3(value("P_b")) - round3(value("P_b'"))).abs());
                (gap - cell.printed).abs() < 1e-9
            })
            .count();
        details.push(format!(
            "  {explained}/{} Err mismatches equal |P_b - P_b'| taken after rounding both to 3 decimals",
            err_misses.len()
        ));
    }

    let anomalies: Vec<_> = report.anomalous_rows().collect();
    let documented = anomalies.len() == 2
        && anomalies.iter().any(|r| r.label.contains("r=20 p=0.9"))
        && anomalies.iter().any(|r| r.label.contains("r=50 p=0.5"))
        && anomalies
            .iter()
            .all(|r| r.notes.iter().any(|n| n.contains("P_b'=")));
    pass &= documented;
    details.push(format!(
        "{} anomalous rows reported with recomputed values: {}",
        if documented { "PASS" } else { "FAIL" },
        anomalies.len()
    ));
    for row in anomalies {
        details.push(format!("  {}", row.label));
        details.extend(row.notes.iter().map(|n| format!("    {n}")));
    }
    Outcome {
        pass,
        summary: format!(
            "cost-bound table: {}/{} graded cells match",
            report.cells_matched, report.cells_checked
        ),
        details,
    }
}

fn failure_percentages() -> Outcome {
    let model = model(0.6);
    let f2 = failure_prob(&RuleBConfig::new(2).unwrap(), &model);
    let f10 = failure_prob(&RuleBConfig::new(10).unwrap(), &model);
    Outcome::new(
        (0.26..=0.28).contains(&f2) && (0.09..=0.11).contains(&f10),
        format!("failure at p=0.6: m=2 -> {f2:.5}, m=10 -> {f10:.5}"),
    )
}

fn enumeration() -> Outcome {
    let cases = (0..=3).flat_map(|m| [0.1, 0.3, 0.5, 0.7, 0.9].map(|p| (m, p)));
    let result = sweep(cases, |(m, p)| check_enumeration(m, p));
    let mut out = Outcome::new(
        result.is_ok(),
        "path enumeration equals P_m for m<=3 on 5 p values within 1e-12",
    );
    out.details.extend(result.err());
    out
}

fn distribution_suite() -> Outcome {
    let checks: [(&str, Check); 8] = [
        (
            "normalization",
            sweep(grid(), |(p, r)| check_normalization(p, r)),
        ),
        (
            "geometric reduction",
            sweep(P_GRID, check_geometric_reduction),
        ),
        (
            "recurrence vs log space",
            sweep(grid(), |(p, r)| check_dual_computation(p, r)),
        ),
        ("moments", sweep(grid(), |(p, r)| check_moments(p, r))),
        (
            "pgf slope",
            sweep(pgf_grid(), |(p, r)| check_pgf_derivative(p, r)),
        ),
        ("pgf root", sweep(grid(), |(p, r)| check_pgf_root(p, r))),
        (
            "complement symmetry",
            sweep(
                (0..=20).flat_map(|m| (1..=19).map(move |i| (m, i as f64 * 0.05))),
                |(m, p)| check_complement_symmetry(m, p),
            ),
        ),
        ("phi symmetry", check_phi_symmetry()),
    ];
    let failed: Vec<_> = checks.iter().filter(|(_, c)| c.is_err()).collect();
    let mut out = Outcome::new(
        failed.is_empty(),
        format!(
            "distribution properties: {}/{} hold",
            checks.len() - failed.len(),
            checks.len()
        ),
    );
    out.details = failed
        .iter()
        .map(|(name, c)| format!("{name}: {}", c.as_ref().unwrap_err()))
        .collect();
    out
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn monte_carlo() -> Outcome {
    let rule_a = SimulationConfig::new(
        model(0.5),
        RuleConfig::RuleA(RuleAConfig::new(20, 0.5).unwrap()),
        EPISODES,
        SEED,
    )
    .unwrap()
    .with_bound(25)
    .unwrap();
    let a = simulate(&rule_a).unwrap();
    let mean_gate = 4.0 * (40.0 / EPISODES as f64).sqrt();
    let mean_ok = (a.empirical_mean_negatives - 20.0).abs() <= mean_gate;
    let exc = a.empirical_exceedance.unwrap();
    let exc_gate = 4.0 * binomial_se(0.186, EPISODES);
    let exc_ok = (exc - 0.186).abs() <= exc_gate;

    let rule_b = SimulationConfig::new(
        model(0.6),
        RuleConfig::RuleB(RuleBConfig::new(1).unwrap()),
        EPISODES,
        SEED,
    )
    .unwrap();
    let b = simulate(&rule_b).unwrap();
    let rate_gate = 4.0 * binomial_se(0.6826, EPISODES);
    let rate_ok = (b.empirical_success_rate - 0.6826).abs() <= rate_gate;

    let rerun_ok = simulate(&rule_a).unwrap() == a
        && simulate_chunked(&rule_a, 1000).unwrap() == a
        && simulate(&rule_b).unwrap() == b;

    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let exact = exceedance_exact(&model(0.5), &RuleAConfig::new(20, 0.5).unwrap(), 25);
    Outcome {
        pass: mean_ok && exc_ok && rate_ok && rerun_ok,
        summary: format!("Monte Carlo, n={EPISODES}, seed={SEED}"),
        details: vec![
            format!(
                "{} mean W (p=0.5, r=20): {:.5}, |diff| {:.5} <= {mean_gate:.5}",
                mark(mean_ok),
                a.empirical_mean_negatives,
                (a.empirical_mean_negatives - 20.0).abs()
            ),
            format!(
                "{} exceedance at b=25: {exc:.5} vs 0.186 (exact {exact:.5}), |diff| {:.5} <= {exc_gate:.5}",
                mark(exc_ok),
                (exc - 0.186).abs()
            ),
            format!(
                "{} success rate (m=1, p=0.6): {:.5} vs 0.6826, |diff| {:.5} <= {rate_gate:.5}",
                mark(rate_ok),
                b.empirical_success_rate,
                (b.empirical_success_rate - 0.6826).abs()
            ),
            format!("{} reruns and repartitioning are bit-identical", mark(rerun_ok)),
        ],
    }
}

fn chi_square() -> Outcome {
    let (md, sp) = (model(0.5), spec(5));
    let config = SimulationConfig::new(
        md,
        RuleConfig::RuleA(RuleAConfig::new(5, 0.5).unwrap()),
        EPISODES,
        SEED,
    )
    .unwrap();
    let hist = simulate(&config).unwrap().negatives_histogram;
    let n = EPISODES as f64;
    let last = 30u64;
    let mut stat = 0.0;
    for k in 0..=last {
        let (observed, expected) = if k < last {
            (hist.get(&k).copied().unwrap_or(0), n * nb_pmf(&md, &sp, k))
        } else {
            let pooled: u64 = hist.range(last..).map(|(_, v)| v).sum();
            (pooled, n * (1.0 - nb_cdf(&md, &sp, last - 1)))
        };
        stat += (observed as f64 - expected).powi(2) / expected;
    }
    let df = last as f64;
    let critical = ChiSquared::new(df).unwrap().inverse_cdf(0.999);
    Outcome::new(
        stat < critical,
        format!("chi-square W_5 at p=0.5, k=0..30 pooled: {stat:.2} < {critical:.2} (df {df})"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1", Duration::from_millis(100), table_ii),
        ("2", Duration::from_secs(1), table_i),
        ("3", Duration::from_secs(1), failure_percentages),
        ("4", Duration::from_secs(1), enumeration),
        ("5", Duration::from_secs(5), distribution_suite),
        ("6", Duration::from_secs(30), monte_carlo),
        ("7", Duration::from_secs(30), chi_square),
    ];
    let mut failures = 0;
    for (id, budget, run) in criteria {
        let out = timed(budget, run);
        println!(
            "{} criterion {id}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.summary
        );
        for d in &out.details {
            println!("    {d}");
        }
        failures += usize::from(!out.pass);
    }
    println!("acceptance: {}/7 criteria pass", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
