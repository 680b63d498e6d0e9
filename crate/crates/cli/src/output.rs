//! Writing reports: one CSV per table and a JSON summary.

use std::fs;

use fracrb::report::{Cell, ExperimentReport};
use serde_json::{json, Map, Value};

use crate::{CliError, RunConfig};

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Int(v) => json!(v),
        Cell::Real(v) if v.is_finite() => json!(v),
        Cell::Real(v) => json!(v.to_string()),
        Cell::Text(t) => json!(t),
        Cell::Empty => Value::Null,
    }
}

pub fn summary_json(cfg: &RunConfig, report: &ExperimentReport) -> Value {
    let config: Map<String, Value> = cfg.canonical().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let summary: Map<String, Value> = report.summary.iter().map(|(k, v)| (k.clone(), cell_json(v))).collect();
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "measured": c.measured, "rule": c.rule, "passed": c.passed }))
        .collect();
    json!({
        "report": report.name,
        "config_hash": report.config_hash,
        "config": config,
        "summary": summary,
        "checks": checks,
        "passed": report.all_passed(),
    })
}

pub fn write_report(cfg: &RunConfig, report: &ExperimentReport) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Config(format!("output directory {}: {e}", cfg.out.display()));
    fs::create_dir_all(&cfg.out).map_err(io)?;
    report.write_tables(&cfg.out).map_err(|e| CliError::Config(e.to_string()))?;
    let text = serde_json::to_string_pretty(&summary_json(cfg, report)).expect("JSON values are serialisable");
    fs::write(cfg.out.join(format!("{}_summary.json", report.name)), text + "\n").map_err(io)?;
    Ok(())
}

pub fn print_checks(report: &ExperimentReport) {
    for c in &report.checks {
        println!(
            "{} {}: {} (rule {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fracrb::report::format_significant(c.measured, 6),
            c.rule
        );
    }
}
