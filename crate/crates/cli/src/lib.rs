//! Command-line experiments: convergence, constants, conditioning, greedy
//! training, speedup and the property suite, written as CSV plus a JSON summary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use std::fmt;

use fracrb::report::ExperimentReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{Command, Flags, Preset, RunConfig};

/// Fixed seed for every random test parameter; runs are reproducible.
pub const SEED: u64 = 0x5eed_f4ac_0001;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(fracrb::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fracrb::Error> for CliError {
    fn from(e: fracrb::Error) -> Self {
        match e {
            fracrb::Error::Config(m) => Self::Config(m),
            other => Self::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 2;

/// Uniform samples from the parameter box, deterministic for a given seed.
pub fn random_parameters(parameter_box: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| parameter_box.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect())
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<ExperimentReport, CliError> {
    let mut report = match cfg.command {
        Command::Convergence => experiments::run_convergence(cfg)?,
        Command::Constants => experiments::run_constants(cfg)?,
        Command::Conditioning => experiments::run_conditioning(cfg)?,
        Command::Greedy => experiments::run_greedy(cfg)?,
        Command::Speedup => experiments::run_speedup(cfg)?,
        Command::Verify => verify::run_verify(cfg)?,
    };
    report.config_hash = cfg.hash();
    Ok(report)
}

/// Runs the command, writes its artifacts and returns the process exit code.
pub fn run_and_write(cfg: &RunConfig) -> i32 {
    let result = run(cfg).and_then(|report| {
        output::write_report(cfg, &report)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            output::print_checks(&report);
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_ACCEPTANCE
            }
        }
        Err(e) => {
            eprintln!("fracrb: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(fracrb::Error::Config("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(fracrb::Error::SvdConvergence).exit_code(), 4);
    }

    #[test]
    fn parameters_are_reproducible_and_inside() {
        let bx = [(0.7, 1.3), (0.0, 1.0)];
        let a = random_parameters(&bx, 20, SEED);
        assert_eq!(a, random_parameters(&bx, 20, SEED));
        assert!(a.iter().all(|mu| mu[0] >= 0.7 && mu[0] < 1.3 && mu[1] >= 0.0 && mu[1] < 1.0));
    }
}
