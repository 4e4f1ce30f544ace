use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::prob_core::{
    geometric_pmf, nb_cdf, nb_mean, nb_pmf, nb_variance, pgf_eval, RewardModel, WaitingTimeSpec,
};
use crate::reproduce::{ReproductionReport, RowStatus};
use crate::rule_a::{
    analyze_rule_a, classify_outcome, estimate_p, rewards_ratio, success_probability, BoundSpec,
    CostModel, RuleAConfig, RuleAReport,
};
use crate::rule_b::{analyze_rule_b, RuleBConfig, RuleBReport};
use crate::simulator::{RuleConfig, SimulationConfig, SimulationSummary};
use crate::Conclusion;

use super::DistArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// A command result that can be written in every output encoding.
pub(crate) trait Render {
    fn json(&self) -> Value;
    /// Header plus data rows; every row has as many cells as the header.
    fn table(&self) -> (Vec<String>, Vec<Vec<String>>);
    fn text(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json_string(&self.json()),
            Format::Csv => {
                let (header, rows) = self.table();
                csv_string(&header, &rows)
            }
            Format::Text => self.text(),
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("view types serialize to JSON")
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

fn cell<T: ToString>(v: T) -> String {
    v.to_string()
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn conclusion_str(c: Conclusion) -> &'static str {
    match c {
        Conclusion::Success => "success",
        Conclusion::Failure => "failure",
    }
}

#[derive(Debug, Serialize)]
struct Point<K> {
    at: K,
    value: f64,
}

#[derive(Debug, Serialize)]
pub(crate) struct DistView {
    p: f64,
    q: f64,
    r: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pmf: Option<Point<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cdf: Option<Point<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometric_pmf: Option<Point<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pgf: Option<Point<f64>>,
}

impl DistView {
    pub fn build(model: &RewardModel, spec: &WaitingTimeSpec, args: &DistArgs) -> Result<Self> {
        let any_point = args.pmf_at.is_some()
            || args.cdf_at.is_some()
            || args.geometric_at.is_some()
            || args.pgf_at.is_some();
        let moments_default = !any_point && !args.mean && !args.variance;
        let pgf = match args.pgf_at {
            Some(z) => Some(Point {
                at: z,
                value: pgf_eval(model, spec, z)?,
            }),
            None => None,
        };
        Ok(Self {
            p: model.p(),
            q: model.q(),
            r: spec.r(),
            mean: (args.mean || moments_default).then(|| nb_mean(model, spec)),
            variance: (args.variance || moments_default).then(|| nb_variance(model, spec)),
            pmf: args.pmf_at.map(|k| Point {
                at: k,
                value: nb_pmf(model, spec, k),
            }),
            cdf: args.cdf_at.map(|b| Point {
                at: b,
                value: nb_cdf(model, spec, b),
            }),
            geometric_pmf: args.geometric_at.map(|k| Point {
                at: k,
                value: geometric_pmf(model, k),
            }),
            pgf,
        })
    }
}

impl Render for DistView {
    fn json(&self) -> Value {
        to_value(self)
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["p".to_string(), "q".into(), "r".into()];
        let mut row = vec![cell(self.p), cell(self.q), cell(self.r)];
        let mut push = |name: &str, v: String| {
            header.push(name.to_string());
            row.push(v);
        };
        if let Some(m) = self.mean {
            push("mean", cell(m));
        }
        if let Some(v) = self.variance {
            push("variance", cell(v));
        }
        if let Some(pt) = &self.pmf {
            push("pmf_k", cell(pt.at));
            push("pmf", cell(pt.value));
        }
        if let Some(pt) = &self.cdf {
            push("cdf_b", cell(pt.at));
            push("cdf", cell(pt.value));
        }
        if let Some(pt) = &self.geometric_pmf {
            push("geometric_k", cell(pt.at));
            push("geometric_pmf", cell(pt.value));
        }
        if let Some(pt) = &self.pgf {
            push("pgf_z", cell(pt.at));
            push("pgf", cell(pt.value));
        }
        (header, vec![row])
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p: {}  q: {}  r: {}", self.p, self.q, self.r);
        if let Some(m) = self.mean {
            let _ = writeln!(s, "mean: {m:.2}");
        }
        if let Some(v) = self.variance {
            let _ = writeln!(s, "variance: {v:.4}");
        }
        if let Some(pt) = &self.pmf {
            let _ = writeln!(s, "pmf({}): {:.6}", pt.at, pt.value);
        }
        if let Some(pt) = &self.cdf {
            let _ = writeln!(s, "cdf({}): {:.6}", pt.at, pt.value);
        }
        if let Some(pt) = &self.geometric_pmf {
            let _ = writeln!(s, "geometric_pmf({}): {:.6}", pt.at, pt.value);
        }
        if let Some(pt) = &self.pgf {
            let _ = writeln!(s, "pgf({}): {:.6}", pt.at, pt.value);
        }
        s
    }
}

#[derive(Debug, Serialize)]
struct ObservedView {
    negatives: u64,
    ratio: f64,
    conclusion: Conclusion,
    p_hat: f64,
}

#[derive(Debug, Serialize)]
pub(crate) struct RuleAView {
    p: f64,
    q: f64,
    r: u64,
    rho_star: f64,
    cost_per_observation: f64,
    bound: BoundSpec,
    rewards_ratio: f64,
    success_probability: f64,
    #[serde(flatten)]
    report: RuleAReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    observed: Option<ObservedView>,
}

impl RuleAView {
    pub fn build(
        model: &RewardModel,
        config: &RuleAConfig,
        costs: &CostModel,
        bound: &BoundSpec,
        observed: Option<u64>,
    ) -> Result<Self> {
        let observed = match observed {
            Some(w) => Some(ObservedView {
                negatives: w,
                ratio: w as f64 / config.r() as f64,
                conclusion: classify_outcome(w, config),
                p_hat: estimate_p(w, config.r())?,
            }),
            None => None,
        };
        Ok(Self {
            p: model.p(),
            q: model.q(),
            r: config.r(),
            rho_star: config.rho_star(),
            cost_per_observation: costs.per_observation(),
            bound: *bound,
            rewards_ratio: rewards_ratio(model),
            success_probability: success_probability(model, config),
            report: analyze_rule_a(model, config, costs, bound)?,
            observed,
        })
    }
}

fn bound_parts(bound: &BoundSpec) -> (&'static str, String) {
    match bound {
        BoundSpec::Absolute(b) => ("absolute", cell(b)),
        BoundSpec::Additive(d) => ("additive", cell(d)),
        BoundSpec::Multiplicative(a) => ("multiplicative", cell(a)),
    }
}

impl Render for RuleAView {
    fn json(&self) -> Value {
        to_value(self)
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let (kind, param) = bound_parts(&self.bound);
        let rep = &self.report;
        let mut header: Vec<String> = [
            "p",
            "q",
            "r",
            "rho_star",
            "cost_per_observation",
            "bound_kind",
            "bound_param",
            "rewards_ratio",
            "success_probability",
            "expected_negatives",
            "resolved_bound",
            "exceedance_exact",
            "exceedance_approx",
            "approx_error",
            "min_cost",
            "max_cost_at_bound",
        ]
        .map(String::from)
        .to_vec();
        let mut row = vec![
            cell(self.p),
            cell(self.q),
            cell(self.r),
            cell(self.rho_star),
            cell(self.cost_per_observation),
            kind.to_string(),
            param,
            cell(self.rewards_ratio),
            cell(self.success_probability),
            cell(rep.expected_negatives),
            cell(rep.resolved_bound),
            cell(rep.exceedance_exact),
            cell(rep.exceedance_approx),
            cell(rep.approx_error),
            cell(rep.min_cost),
            cell(rep.max_cost_at_bound),
        ];
        if let Some(o) = &self.observed {
            header.extend(["observed_negatives", "observed_conclusion", "p_hat"].map(String::from));
            row.extend([
                cell(o.negatives),
                conclusion_str(o.conclusion).to_string(),
                cell(o.p_hat),
            ]);
        }
        (header, vec![row])
    }

    fn text(&self) -> String {
        let rep = &self.report;
        let (kind, param) = bound_parts(&self.bound);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Rule A  p={} q={} r={} rho*={} c={}",
            self.p, self.q, self.r, self.rho_star, self.cost_per_observation
        );
        let _ = writeln!(s, "rewards ratio q/p         {:.4}", self.rewards_ratio);
        let _ = writeln!(
            s,
            "P[success]                {:.4}",
            self.success_probability
        );
        let _ = writeln!(s, "E[W_r]                    {:.2}", rep.expected_negatives);
        let _ = writeln!(
            s,
            "bound b                   {} ({kind} {param})",
            rep.resolved_bound
        );
        let _ = writeln!(s, "P_b exact                 {:.3}", rep.exceedance_exact);
        let _ = writeln!(s, "P_b normal approx         {:.3}", rep.exceedance_approx);
        let _ = writeln!(s, "|approx - exact|          {:.3}", rep.approx_error);
        let _ = writeln!(s, "min cost r*c              {:.2}", rep.min_cost);
        let _ = writeln!(s, "cost at bound (r+b)*c     {:.2}", rep.max_cost_at_bound);
        if let Some(o) = &self.observed {
            let _ = writeln!(
                s,
                "observed W={} (W/r={:.4}): {}, p_hat={:.4}",
                o.negatives,
                o.ratio,
                conclusion_str(o.conclusion),
                o.p_hat
            );
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub(crate) struct RuleBView {
    m: u64,
    h: u64,
    p: f64,
    q: f64,
    #[serde(flatten)]
    report: RuleBReport,
}

impl RuleBView {
    pub fn build(config: &RuleBConfig, model: &RewardModel) -> Self {
        Self {
            m: config.m(),
            h: config.h(),
            p: model.p(),
            q: model.q(),
            report: analyze_rule_b(config, model),
        }
    }
}

impl Render for RuleBView {
    fn json(&self) -> Value {
        to_value(self)
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = [
            "m",
            "h",
            "p",
            "q",
            "success_prob",
            "failure_prob",
            "length_min",
            "length_max",
            "k",
            "observation",
            "f_k",
        ]
        .map(String::from)
        .to_vec();
        let rep = &self.report;
        let rows = rep
            .per_length_probs
            .iter()
            .map(|f| {
                vec![
                    cell(self.m),
                    cell(self.h),
                    cell(self.p),
                    cell(self.q),
                    cell(rep.success_prob),
                    cell(rep.failure_prob),
                    cell(rep.length_min),
                    cell(rep.length_max),
                    cell(f.k),
                    cell(f.observation),
                    cell(f.probability),
                ]
            })
            .collect();
        (header, rows)
    }

    fn text(&self) -> String {
        let rep = &self.report;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Rule B  m={} h={} p={} q={}",
            self.m, self.h, self.p, self.q
        );
        let _ = writeln!(s, "P_m (success)      {:.4}", rep.success_prob);
        let _ = writeln!(s, "1 - P_m (failure)  {:.4}", rep.failure_prob);
        let _ = writeln!(
            s,
            "episode length     {}..={}",
            rep.length_min, rep.length_max
        );
        let _ = writeln!(s, "   k  observation  f_k");
        for f in &rep.per_length_probs {
            let _ = writeln!(s, "{:>4}  {:>11}  {:.6}", f.k, f.observation, f.probability);
        }
        s
    }
}

#[derive(Debug, Default, Serialize)]
struct Deviations {
    mean_negatives: Option<f64>,
    var_negatives: Option<f64>,
    exceedance: Option<f64>,
    success_rate: f64,
}

#[derive(Debug, Serialize)]
pub(crate) struct SimulateView {
    config: SimulationConfig,
    bound_spec: Option<BoundSpec>,
    summary: SimulationSummary,
    deviation: Deviations,
}

fn abs_diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? - b?).abs())
}

impl SimulateView {
    pub fn build(
        config: &SimulationConfig,
        bound_spec: Option<BoundSpec>,
        summary: SimulationSummary,
    ) -> Self {
        let a = &summary.analytic;
        let deviation = Deviations {
            mean_negatives: abs_diff(Some(summary.empirical_mean_negatives), a.mean_negatives),
            var_negatives: abs_diff(Some(summary.empirical_var_negatives), a.var_negatives),
            exceedance: abs_diff(summary.empirical_exceedance, a.exceedance),
            success_rate: (summary.empirical_success_rate - a.success_rate).abs(),
        };
        Self {
            config: *config,
            bound_spec,
            summary,
            deviation,
        }
    }

    fn rule_parts(&self) -> (&'static str, &'static str, u64) {
        match self.config.rule() {
            RuleConfig::RuleA(a) => ("rule_a", "r", a.r()),
            RuleConfig::RuleB(b) => ("rule_b", "m", b.m()),
        }
    }
}

impl Render for SimulateView {
    fn json(&self) -> Value {
        to_value(self)
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let (rule, _, param) = self.rule_parts();
        let s = &self.summary;
        let a = &s.analytic;
        let d = &self.deviation;
        let header = [
            "rule",
            "p",
            "param",
            "n_episodes",
            "seed",
            "bound",
            "empirical_mean_negatives",
            "analytic_mean_negatives",
            "deviation_mean_negatives",
            "empirical_var_negatives",
            "analytic_var_negatives",
            "deviation_var_negatives",
            "empirical_exceedance",
            "analytic_exceedance",
            "deviation_exceedance",
            "empirical_success_rate",
            "analytic_success_rate",
            "deviation_success_rate",
            "empirical_mean_observations",
            "mean_cost",
        ]
        .map(String::from)
        .to_vec();
        let row = vec![
            rule.to_string(),
            cell(self.config.model().p()),
            cell(param),
            cell(s.n_episodes),
            cell(s.seed),
            opt_cell(self.config.bound()),
            cell(s.empirical_mean_negatives),
            opt_cell(a.mean_negatives),
            opt_cell(d.mean_negatives),
            cell(s.empirical_var_negatives),
            opt_cell(a.var_negatives),
            opt_cell(d.var_negatives),
            opt_cell(s.empirical_exceedance),
            opt_cell(a.exceedance),
            opt_cell(d.exceedance),
            cell(s.empirical_success_rate),
            cell(a.success_rate),
            cell(d.success_rate),
            cell(s.empirical_mean_observations),
            opt_cell(s.mean_cost),
        ];
        (header, vec![row])
    }

    fn text(&self) -> String {
        let (rule, name, param) = self.rule_parts();
        let s = &self.summary;
        let a = &s.analytic;
        let d = &self.deviation;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "simulate {rule}  p={} {name}={param} n={} seed={}",
            self.config.model().p(),
            s.n_episodes,
            s.seed
        );
        if let Some(b) = self.config.bound() {
            let _ = writeln!(out, "bound b = {b}");
        }
        let _ = writeln!(
            out,
            "{:<22}{:>14}{:>14}{:>14}",
            "statistic", "empirical", "analytic", "|diff|"
        );
        let mut line = |label: &str, emp: Option<f64>, ana: Option<f64>, dev: Option<f64>| {
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{label:<22}{:>14}{:>14}{:>14}",
                fmt(emp),
                fmt(ana),
                fmt(dev)
            );
        };
        line(
            "mean negatives",
            Some(s.empirical_mean_negatives),
            a.mean_negatives,
            d.mean_negatives,
        );
        line(
            "var negatives",
            Some(s.empirical_var_negatives),
            a.var_negatives,
            d.var_negatives,
        );
        if s.empirical_exceedance.is_some() {
            line(
                "P[W > b]",
                s.empirical_exceedance,
                a.exceedance,
                d.exceedance,
            );
        }
        line(
            "success rate",
            Some(s.empirical_success_rate),
            Some(a.success_rate),
            Some(d.success_rate),
        );
        line(
            "mean observations",
            Some(s.empirical_mean_observations),
            None,
            None,
        );
        if s.mean_cost.is_some() {
            line("mean cost", s.mean_cost, None, None);
        }
        out
    }
}

impl Render for ReproductionReport {
    fn json(&self) -> Value {
        let mut v = to_value(self);
        v["passes"] = Value::Bool(self.passes());
        v
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = [
            "table",
            "row",
            "status",
            "column",
            "printed",
            "recomputed",
            "tolerance",
            "pass",
        ]
        .map(String::from)
        .to_vec();
        let rows = self
            .rows
            .iter()
            .flat_map(|r| {
                r.cells.iter().map(move |c| {
                    vec![
                        self.table.to_string(),
                        r.label.clone(),
                        status_str(r.status).to_string(),
                        c.column.to_string(),
                        cell(c.printed),
                        cell(c.recomputed),
                        cell(c.tolerance),
                        cell(c.pass),
                    ]
                })
            })
            .collect();
        (header, rows)
    }

    fn text(&self) -> String {
        let decimals = match self.table {
            crate::reproduce::TableId::I => 3,
            crate::reproduce::TableId::II => 4,
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Table {}: {}/{} cells of non-anomalous rows match",
            self.table, self.cells_matched, self.cells_checked
        );
        for row in &self.rows {
            let _ = writeln!(s, "{} [{}]", row.label, status_str(row.status));
            for c in &row.cells {
                let verdict = match (c.pass, row.status) {
                    (true, _) => "ok",
                    (false, RowStatus::Normal) => "MISMATCH",
                    (false, RowStatus::Anomalous) => "differs (documented)",
                };
                let _ = writeln!(
                    s,
                    "    {:<7} printed {:.*}  recomputed {:.6}  {verdict}",
                    c.column, decimals, c.printed, c.recomputed
                );
            }
            for note in &row.notes {
                let _ = writeln!(s, "    note: {note}");
            }
        }
        let anomalies: Vec<_> = self.anomalous_rows().map(|r| r.label.as_str()).collect();
        if !anomalies.is_empty() {
            let _ = writeln!(s, "documented anomalies: {}", anomalies.join("; "));
        }
        let _ = writeln!(s, "result: {}", if self.passes() { "PASS" } else { "FAIL" });
        s
    }
}

fn status_str(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Normal => "normal",
        RowStatus::Anomalous => "anomalous",
    }
}
