//! Recomputes the bundled reference tables and compares them cell by cell.
//!
//! Fixtures live in `data/*.tsv` (tab separated, `#` comments) and are
//! embedded at compile time. Table I cells are compared at 3 decimals
//! (`±5e-4`, the mean at `±5e-3`), Table II cells at 4 decimals (`±5e-5`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::normal_approx::approximation_error;
use crate::prob_core::{nb_mean, RewardModel};
use crate::rule_a::{exceedance_approx, exceedance_exact, resolve_bound, BoundSpec, RuleAConfig};
use crate::rule_b::{success_prob, RuleBConfig};

const TABLE_I_DATA: &str = include_str!("../data/table_i.tsv");
const TABLE_II_DATA: &str = include_str!("../data/table_ii.tsv");

pub const TABLE_I_TOLERANCE: f64 = 5e-4;
pub const TABLE_I_MEAN_TOLERANCE: f64 = 5e-3;
pub const TABLE_II_TOLERANCE: f64 = 5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableId {
    I,
    II,
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "I" | "i" | "1" => Ok(Self::I),
            "II" | "ii" | "2" => Ok(Self::II),
            other => Err(format!("unknown table `{other}` (expected I or II)")),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::II => "II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Normal,
    Anomalous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundRule {
    Additive,
    Multiplicative,
}

/// One printed row of the cost-bound table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableIRow {
    pub rule: BoundRule,
    pub param: f64,
    pub r: u64,
    pub p: f64,
    pub q: f64,
    pub mean: f64,
    pub b: u64,
    pub b_input: u64,
    pub p_b: f64,
    pub p_b_exact: f64,
    pub err: f64,
    pub status: RowStatus,
    pub note: String,
}

/// One printed cell of the race-to-threshold table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableIIRow {
    pub m: u64,
    pub p: f64,
    pub q: f64,
    pub p_m: f64,
    pub status: RowStatus,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TableFixture {
    I(Vec<TableIRow>),
    II(Vec<TableIIRow>),
}

fn parse_rows<T: for<'de> Deserialize<'de>>(data: &str) -> Vec<T> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_reader(data.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .expect("embedded fixture is well formed")
}

pub fn table_fixture(table: TableId) -> TableFixture {
    match table {
        TableId::I => TableFixture::I(parse_rows(TABLE_I_DATA)),
        TableId::II => TableFixture::II(parse_rows(TABLE_II_DATA)),
    }
}

pub fn table_i_rows() -> Vec<TableIRow> {
    parse_rows(TABLE_I_DATA)
}

pub fn table_ii_rows() -> Vec<TableIIRow> {
    parse_rows(TABLE_II_DATA)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCheck {
    pub column: &'static str,
    pub printed: f64,
    pub recomputed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CellCheck {
    fn new(column: &'static str, printed: f64, recomputed: f64, tolerance: f64) -> Self {
        Self {
            column,
            printed,
            recomputed,
            tolerance,
            pass: (printed - recomputed).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowCheck {
    pub label: String,
    pub status: RowStatus,
    pub cells: Vec<CellCheck>,
    /// Diagnostic lines: the fixture note, rounding observations, alternative recomputations.
    pub notes: Vec<String>,
}

impl RowCheck {
    pub fn passes(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproductionReport {
    pub table: TableId,
    pub rows: Vec<RowCheck>,
    pub cells_checked: usize,
    pub cells_matched: usize,
}

impl ReproductionReport {
    fn new(table: TableId, rows: Vec<RowCheck>) -> Self {
        let graded = rows.iter().filter(|r| r.status == RowStatus::Normal);
        let (checked, matched) = graded
            .flat_map(|r| r.cells.iter())
            .fold((0, 0), |(n, ok), c| (n + 1, ok + c.pass as usize));
        Self {
            table,
            rows,
            cells_checked: checked,
            cells_matched: matched,
        }
    }

    /// True iff every cell of every non-anomalous row matches.
    pub fn passes(&self) -> bool {
        self.cells_checked == self.cells_matched
    }

    pub fn anomalous_rows(&self) -> impl Iterator<Item = &RowCheck> {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Anomalous)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = (&RowCheck, &CellCheck)> {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Normal)
            .flat_map(|r| r.cells.iter().filter(|c| !c.pass).map(move |c| (r, c)))
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

pub fn check_table_i_row(row: &TableIRow) -> Result<RowCheck> {
    let model = RewardModel::new(row.p)?;
    let config = RuleAConfig::new(row.r, 1.0)?;
    let spec = config.waiting_time();
    let tail = |b| {
        let approx = exceedance_approx(&model, &config, b);
        let exact = exceedance_exact(&model, &config, b);
        (approx, exact, approximation_error(&model, &spec, b))
    };

    let (approx, exact, err) = tail(row.b_input);
    let cells = vec![
        CellCheck::new(
            "E[W_r]",
            row.mean,
            nb_mean(&model, &spec),
            TABLE_I_MEAN_TOLERANCE,
        ),
        CellCheck::new("P_b", row.p_b, approx, TABLE_I_TOLERANCE),
        CellCheck::new("P_b'", row.p_b_exact, exact, TABLE_I_TOLERANCE),
        CellCheck::new("Err", row.err, err, TABLE_I_TOLERANCE),
    ];

    let mut notes = Vec::new();
    if row.note != "-" {
        notes.push(row.note.clone());
    }
    let bound_spec = match row.rule {
        BoundRule::Additive => BoundSpec::additive(row.param)?,
        BoundRule::Multiplicative => BoundSpec::multiplicative(row.param)?,
    };
    let resolved = resolve_bound(&bound_spec, &model, &config)?;
    if resolved != row.b {
        notes.push(format!(
            "round-half-up gives b={resolved}, printed b={}",
            row.b
        ));
    }
    if row.b_input != row.b {
        let (a, e, d) = tail(row.b);
        notes.push(format!(
            "at printed b={}: P_b={a:.3}, P_b'={e:.3}, Err={d:.3}; recomputed at b={}: P_b={approx:.3}, P_b'={exact:.3}, Err={err:.3}",
            row.b, row.b_input
        ));
    }
    if resolved != row.b_input {
        let (a, e, d) = tail(resolved);
        notes.push(format!(
            "at round-half-up b={resolved}: P_b={a:.3}, P_b'={e:.3}, Err={d:.3}"
        ));
    }
    let rounded_gap = round_to((round_to(approx, 3) - round_to(exact, 3)).abs(), 3);
    if (rounded_gap - err).abs() > 1e-12 && (row.err - err).abs() > TABLE_I_TOLERANCE {
        notes.push(format!(
            "unrounded |P_b - P_b'| = {err:.6}; the gap between the 3-decimal values is {rounded_gap:.3}"
        ));
    }

    Ok(RowCheck {
        label: format!(
            "{} {}={} r={} p={} b={}",
            match row.rule {
                BoundRule::Additive => "additive",
                BoundRule::Multiplicative => "multiplicative",
            },
            match row.rule {
                BoundRule::Additive => "d",
                BoundRule::Multiplicative => "alpha",
            },
            row.param,
            row.r,
            row.p,
            row.b_input
        ),
        status: row.status,
        cells,
        notes,
    })
}

pub fn check_table_ii_row(row: &TableIIRow) -> Result<RowCheck> {
    let model = RewardModel::new(row.p)?;
    let config = RuleBConfig::new(row.m)?;
    let mut notes = Vec::new();
    if row.note != "-" {
        notes.push(row.note.clone());
    }
    Ok(RowCheck {
        label: format!("m={} p={}", row.m, row.p),
        status: row.status,
        cells: vec![CellCheck::new(
            "P_m",
            row.p_m,
            success_prob(&config, &model),
            TABLE_II_TOLERANCE,
        )],
        notes,
    })
}

pub fn reproduce_table(table: TableId) -> Result<ReproductionReport> {
    let rows = match table_fixture(table) {
        TableFixture::I(rows) => rows.iter().map(check_table_i_row).collect::<Result<_>>()?,
        TableFixture::II(rows) => rows.iter().map(check_table_ii_row).collect::<Result<_>>()?,
    };
    Ok(ReproductionReport::new(table, rows))
}
