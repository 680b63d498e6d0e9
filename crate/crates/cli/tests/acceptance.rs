//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs with `harness = false` so the lines are printed even when everything
//! passes.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracrb::problem::Example;
use fracrb::report::ExperimentReport;
use fracrb::solutions::{build_strong_solution, ex1_solution, ex2_solution};
use fracrb_cli::{run, Command, Preset, RunConfig};

const ORDERS: [f64; 3] = [1.8, 1.5, 1.2];

struct Outcome {
    passed: bool,
    detail: String,
}

fn out_dir(tag: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(tag)
}

fn config(command: Command, example: &str, tag: &str) -> RunConfig {
    let mut cfg = RunConfig::preset(command, Preset::Ci, example);
    cfg.out = out_dir(tag);
    cfg
}

/// Runs one or more reports; passes when every check passes.
fn reports(configs: Vec<RunConfig>, select: impl Fn(&str) -> bool) -> Outcome {
    let mut failed = Vec::new();
    let mut total = 0;
    for cfg in &configs {
        let report: ExperimentReport = match run(cfg) {
            Ok(r) => r,
            Err(e) => return Outcome { passed: false, detail: format!("{} aborted: {e}", cfg.command.name()) },
        };
        for c in report.checks.iter().filter(|c| select(&c.name)) {
            total += 1;
            if !c.passed {
                failed.push(format!("{} = {} (want {})", c.name, fracrb::report::format_significant(c.measured, 4), c.rule));
            }
        }
    }
    let passed = failed.is_empty() && total > 0;
    let detail = if failed.is_empty() {
        format!("{total}/{total} checks")
    } else {
        format!("{}/{total} checks; failing: {}", total - failed.len(), failed.join(", "))
    };
    Outcome { passed, detail }
}

fn strong_solution() -> Outcome {
    let mut worst_closed: f64 = 0.0;
    let mut worst_endpoint: f64 = 0.0;
    for s in ORDERS {
        for (example, exact) in [(Example::Ex1, ex1_solution(s)), (Example::Ex2, ex2_solution(s))] {
            let (Ok(exact), Ok(strong)) = (exact, build_strong_solution(&example.diffusion(), &example.load(), s)) else {
                return Outcome { passed: false, detail: format!("construction failed for {} at s={s}", example.name()) };
            };
            for (x, u) in strong.grid.iter().zip(&strong.u) {
                worst_closed = worst_closed.max((u - exact.eval(*x)).abs());
            }
        }
        for example in [Example::Ex3, Example::Ex4] {
            let Ok(strong) = build_strong_solution(&example.diffusion(), &example.load(), s) else {
                return Outcome { passed: false, detail: format!("construction failed for {} at s={s}", example.name()) };
            };
            let (p0, p1) = (strong.p[0], *strong.p.last().unwrap_or(&f64::NAN));
            worst_endpoint = worst_endpoint.max(p0.abs()).max((p1 - 1.0).abs());
        }
    }
    Outcome {
        passed: worst_closed <= 1e-8 && worst_endpoint <= 1e-10,
        detail: format!("sup |u - closed form| = {worst_closed:.2e} (≤ 1e-8), endpoint defect of p = {worst_endpoint:.2e} (≤ 1e-10)"),
    }
}

fn criterion(number: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let passed = outcome.passed && in_time;
    println!(
        "criterion {number:>2} {}: {name}; {}; {:.1}s (limit {}s{})",
        if passed { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" },
    );
    passed
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful for this target
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        criterion(1, "constants table", Duration::from_secs(1), || {
            reports(vec![config(Command::Constants, "ex3", "constants")], |_| true)
        }),
        criterion(2, "FEM convergence Ex1/Ex2", min(5), || {
            reports(
                vec![config(Command::Convergence, "ex1", "ex1"), config(Command::Convergence, "ex2", "ex2")],
                |_| true,
            )
        }),
        criterion(3, "FEM convergence Ex3/Ex4", min(10), || {
            reports(
                vec![config(Command::Convergence, "ex3", "ex3"), config(Command::Convergence, "ex4", "ex4")],
                |_| true,
            )
        }),
        criterion(4, "strong solution cross-check", min(10), strong_solution),
        criterion(5, "conditioning slopes", min(5), || {
            reports(vec![config(Command::Conditioning, "ex3", "conditioning")], |_| true)
        }),
        criterion(6, "greedy, constant diffusion", min(2), || {
            reports(vec![config(Command::Greedy, "constant-diffusion", "greedy-cd")], |_| true)
        }),
        criterion(7, "greedy, greedy-case-1", min(10), || {
            reports(vec![config(Command::Greedy, "greedy-case-1", "greedy-case-1")], |_| true)
        }),
        criterion(8, "certified bound", min(2), || {
            reports(vec![config(Command::Verify, "greedy-case-1", "certification")], |n| {
                n.ends_with("certified_bound_margin") || n.ends_with("snapshot_reproduction")
            })
        }),
        criterion(9, "property suite", min(2), || {
            reports(vec![config(Command::Verify, "greedy-case-1", "verify")], |_| true)
        }),
        criterion(10, "speedup", min(10), || {
            reports(vec![config(Command::Speedup, "greedy-case-1", "speedup")], |_| true)
        }),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
