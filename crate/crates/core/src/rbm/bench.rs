//! Wall-clock comparison of truth and reduced solves.

use std::hint::black_box;
use std::time::Instant;

use crate::dense::solve_dense;
use crate::error::{Error, Result};
use crate::report::{Cell, ExperimentReport, Table};

use super::affine::AffineProblem;
use super::model::{rb_solve, ReducedModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupResult {
    pub fem_dofs: usize,
    pub rb_dofs: usize,
    pub affine_terms: usize,
    /// Median seconds per solve.
    pub assemble_solve: f64,
    pub solve_only: f64,
    pub online: f64,
}

impl SpeedupResult {
    pub fn dof_ratio(&self) -> f64 {
        self.fem_dofs as f64 / self.rb_dofs as f64
    }

    pub fn speedup_vs_solve(&self) -> f64 {
        self.solve_only / self.online
    }

    pub fn speedup_vs_assembly(&self) -> f64 {
        self.assemble_solve / self.online
    }

    pub fn to_report(&self) -> Result<ExperimentReport> {
        let mut report = ExperimentReport::new("speedup");
        let mut t = Table::new("timings", &["method", "dofs", "median_seconds", "ratio_to_online"]);
        for (name, dofs, secs) in [
            ("fem_assemble_solve", self.fem_dofs, self.assemble_solve),
            ("fem_solve", self.fem_dofs, self.solve_only),
            ("rb_online", self.rb_dofs, self.online),
        ] {
            t.push(vec![name.into(), dofs.into(), secs.into(), (secs / self.online).into()])?;
        }
        report.tables.push(t);
        report.add_summary("fem_dofs", self.fem_dofs);
        report.add_summary("rb_dofs", self.rb_dofs);
        report.add_summary("dof_ratio", self.dof_ratio());
        report.add_summary("affine_terms", self.affine_terms);
        report.add_summary("speedup_vs_solve", self.speedup_vs_solve());
        report.add_summary("speedup_vs_assemble_solve", self.speedup_vs_assembly());
        report.add_summary("online_seconds", Cell::Real(self.online));
        Ok(report)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn time<T>(f: impl FnOnce() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    black_box(f()?);
    Ok(start.elapsed().as_secs_f64())
}

/// Online solves are timed in batches of this size; a single call takes a few
/// microseconds, close to the resolution of the clock.
pub const ONLINE_BATCH: usize = 100;

/// Medians over `repetitions × |mu_sample|` measurements of (a) direct
/// assembly plus dense solve, (b) dense solve of a pre-assembled system,
/// (c) online solve including the error bound, averaged over a batch.
pub fn speedup_bench(model: &ReducedModel, problem: &AffineProblem, mu_sample: &[Vec<f64>], repetitions: usize) -> Result<SpeedupResult> {
    if repetitions < 10 {
        return Err(Error::Config(format!("need at least 10 repetitions, got {repetitions}")));
    }
    if mu_sample.is_empty() {
        return Err(Error::Size("empty parameter sample".into()));
    }
    let systems = mu_sample.iter().map(|mu| problem.direct_system(mu)).collect::<Result<Vec<_>>>()?;
    let (mut full, mut solve, mut online) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..repetitions {
        for (mu, sys) in mu_sample.iter().zip(&systems) {
            full.push(time(|| problem.direct_system(mu)?.solve())?);
            solve.push(time(|| solve_dense(&sys.stiffness, &sys.load))?);
            let batch = time(|| {
                for _ in 0..ONLINE_BATCH {
                    black_box(rb_solve(model, mu)?);
                }
                Ok(())
            })?;
            online.push(batch / ONLINE_BATCH as f64);
        }
    }
    Ok(SpeedupResult {
        fem_dofs: problem.n_dofs(),
        rb_dofs: model.size(),
        affine_terms: problem.n_operator_terms(),
        assemble_solve: median(full),
        solve_only: median(solve),
        online: median(online),
    })
}
