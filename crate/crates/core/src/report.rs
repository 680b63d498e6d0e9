//! Tabular experiment output.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Real(v) => format_significant(*v, 6),
            Self::Text(t) => t.clone(),
            Self::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Empty, Into::into)
    }
}

/// `v` with `digits` significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise, trailing zeros dropped.
pub fn format_significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Size(format!(
                "table {} has {} columns, row has {}",
                self.name,
                self.columns.len(),
                row.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// CSV with a trailing `config_hash` column on every row.
    pub fn write_csv<W: Write>(&self, mut out: W, config_hash: &str) -> Result<()> {
        writeln!(out, "{},config_hash", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{},{config_hash}", cells.join(","))?;
        }
        Ok(())
    }
}

/// One pass/fail comparison with the measured value and the rule applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable rule, e.g. `0.4 ± 0.1`.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            rule: format!("{} ± {}", format_significant(target, 6), format_significant(tol, 3)),
            passed: (measured - target).abs() <= tol,
        }
    }

    pub fn within_relative(name: impl Into<String>, measured: f64, target: f64, rel: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            rule: format!("{} ± {}%", format_significant(target, 6), format_significant(100.0 * rel, 3)),
            passed: (measured - target).abs() <= rel * target.abs(),
        }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, rule: format!("≤ {}", format_significant(bound, 3)), passed: measured <= bound }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, rule: format!("≥ {}", format_significant(bound, 3)), passed: measured >= bound }
    }

    pub fn flag(name: impl Into<String>, passed: bool, rule: impl Into<String>) -> Self {
        Self { name: name.into(), measured: if passed { 1.0 } else { 0.0 }, rule: rule.into(), passed }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub tables: Vec<Table>,
    /// Scalar results in insertion order.
    pub summary: Vec<(String, Cell)>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn add_summary(&mut self, key: impl Into<String>, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>_<table>.csv` for every table; returns the paths.
    pub fn write_tables(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.name, t.name));
            let file = std::fs::File::create(&path)?;
            t.write_csv(std::io::BufWriter::new(file), &self.config_hash)?;
            paths.push(path);
        }
        Ok(paths)
    }
}
