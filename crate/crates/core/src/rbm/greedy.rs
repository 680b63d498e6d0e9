//! Weak and strong greedy selection of reduced basis snapshots.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::PiecewiseLinearFn;
use crate::rates::exponential_rate;

use super::affine::{AffineProblem, TrainingSet};
use super::model::ReducedModel;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GreedyMode {
    /// Maximise the certified bound `Δ_n`.
    #[default]
    Weak,
    /// Maximise the true V-error; needs every truth solve.
    Strong,
}

impl GreedyMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Weak => "weak",
            Self::Strong => "strong",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "weak" => Ok(Self::Weak),
            "strong" => Ok(Self::Strong),
            other => Err(Error::Config(format!("unknown greedy mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOptions {
    pub mode: GreedyMode,
    pub tol: f64,
    pub n_max: usize,
}

impl GreedyOptions {
    pub fn new(mode: GreedyMode, tol: f64, n_max: usize) -> Self {
        Self { mode, tol, n_max }
    }
}

/// Sweep over the training set with a basis of size `iteration`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRecord {
    pub iteration: usize,
    /// Parameter added after this sweep, if any.
    pub selected: Option<Vec<f64>>,
    pub max_estimator: f64,
    pub max_true_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxBasis,
    /// The selected snapshot added nothing new to the space.
    Stagnation,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tolerance => "tolerance",
            Self::MaxBasis => "n_max",
            Self::Stagnation => "stagnation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GreedyTrace {
    pub mode: GreedyMode,
    pub n_params: usize,
    pub records: Vec<GreedyRecord>,
    pub stop: StopReason,
}

impl GreedyTrace {
    pub fn final_size(&self) -> usize {
        self.records.iter().filter(|r| r.selected.is_some()).count()
    }

    /// Exponential rate `c` in `max Δ_n ≈ C e^{-c n}`, fitted on `n = 2..n_final`.
    pub fn estimator_rate(&self) -> Result<f64> {
        self.fit(|r| Some(r.max_estimator))
    }

    pub fn true_error_rate(&self) -> Result<f64> {
        self.fit(|r| r.max_true_error)
    }

    fn fit(&self, value: impl Fn(&GreedyRecord) -> Option<f64>) -> Result<f64> {
        let (n, e): (Vec<f64>, Vec<f64>) = self
            .records
            .iter()
            .filter(|r| r.iteration >= 2)
            .filter_map(|r| value(r).filter(|v| *v > 0.0).map(|v| (r.iteration as f64, v)))
            .unzip();
        exponential_rate(&n, &e)
    }

    /// `max Δ_n / max ‖e_n‖_V` per sweep (strong mode only).
    pub fn gap_series(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.max_true_error.map(|t| (r.iteration, r.max_estimator / t)))
            .collect()
    }

    /// `iter,mu_1..mu_P,max_estimator,max_true_error`
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mus: Vec<String> = (1..=self.n_params).map(|k| format!("mu_{k}")).collect();
        writeln!(out, "iter,{},max_estimator,max_true_error", mus.join(","))?;
        for r in &self.records {
            let mu: Vec<String> = match &r.selected {
                Some(mu) => mu.iter().map(|v| format!("{v:.17e}")).collect(),
                None => vec![String::new(); self.n_params],
            };
            let truth = r.max_true_error.map(|v| format!("{v:.6e}")).unwrap_or_default();
            writeln!(out, "{},{},{:.6e},{}", r.iteration, mu.join(","), r.max_estimator, truth)?;
        }
        Ok(())
    }
}

/// Index of the largest value, the lowest index on ties.
fn argmax(values: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite greedy criterion at training point {i}")));
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.ok_or_else(|| Error::Size("training set is empty".into()))
}

pub fn greedy_train(problem: &AffineProblem, training: &TrainingSet, options: GreedyOptions) -> Result<(ReducedModel, GreedyTrace)> {
    if !(options.tol > 0.0) {
        return Err(Error::Config(format!("greedy tolerance must be positive, got {}", options.tol)));
    }
    if options.n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    if training.is_empty() {
        return Err(Error::Size("training set is empty".into()));
    }
    for mu in &training.points {
        problem.check_parameter(mu)?;
    }
    let alphas = training
        .points
        .iter()
        .map(|mu| problem.alpha(mu, problem.variant))
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<Arc<PiecewiseLinearFn>> = match options.mode {
        GreedyMode::Strong => training.points.iter().map(|mu| problem.truth_solve(mu)).collect::<Result<_>>()?,
        GreedyMode::Weak => Vec::new(),
    };

    let mut model = ReducedModel::empty(problem)?;
    let mut records = Vec::new();
    let stop = loop {
        let mut deltas = Vec::with_capacity(training.len());
        let mut errors = Vec::with_capacity(truths.len());
        for (k, mu) in training.points.iter().enumerate() {
            let est = model.estimate_with_alpha(mu, alphas[k])?;
            if let Some(truth) = truths.get(k) {
                let u_n = model.lift_coefficients(&est.coefficients);
                let e: Vec<f64> = truth.coeffs().iter().zip(&u_n).map(|(a, b)| a - b).collect();
                errors.push(problem.v_norm(&e));
            }
            deltas.push(est.delta);
        }
        let (max_estimator, max_true_error) = (argmax(&deltas)?.1, argmax(&errors).ok().map(|e| e.1));
        let (pick, criterion) = match options.mode {
            GreedyMode::Weak => argmax(&deltas)?,
            GreedyMode::Strong => argmax(&errors)?,
        };
        let mut record = GreedyRecord { iteration: model.size(), selected: None, max_estimator, max_true_error };
        if criterion <= options.tol {
            records.push(record);
            break StopReason::Tolerance;
        }
        if model.size() >= options.n_max {
            records.push(record);
            break StopReason::MaxBasis;
        }
        let mu = &training.points[pick];
        let snapshot = problem.truth_solve(mu)?;
        match model.add_snapshot(problem, snapshot.coeffs(), mu) {
            Ok(()) => record.selected = Some(mu.clone()),
            Err(Error::Stagnation(_)) => {
                records.push(record);
                break StopReason::Stagnation;
            }
            Err(e) => return Err(e),
        }
        records.push(record);
    };
    Ok((model, GreedyTrace { mode: options.mode, n_params: problem.n_params(), records, stop }))
}
