//! Run configuration from flags and an optional `key=value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use fracrb::constants::AlphaVariant;
use fracrb::rbm::GreedyMode;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Constants,
    Conditioning,
    Greedy,
    Speedup,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Constants => "constants",
            Self::Conditioning => "conditioning",
            Self::Greedy => "greedy",
            Self::Speedup => "speedup",
            Self::Verify => "verify",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "convergence" => Self::Convergence,
            "constants" => Self::Constants,
            "conditioning" => Self::Conditioning,
            "greedy" => Self::Greedy,
            "speedup" => Self::Speedup,
            "verify" => Self::Verify,
            other => return Err(CliError::Config(format!("unknown command '{other}'"))),
        })
    }

    fn default_example(self) -> &'static str {
        match self {
            Self::Convergence => "ex1",
            Self::Constants | Self::Conditioning => "ex3",
            Self::Greedy | Self::Speedup | Self::Verify => "greedy-case-1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Desk-scale sizes: 4 training points per dimension, truth mesh 2^7, n_max 12.
    Ci,
    /// The paper's sizes: 10 points per dimension, truth mesh 2^9.
    Full,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ci => "ci",
            Self::Full => "full",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "ci" => Ok(Self::Ci),
            "full" => Ok(Self::Full),
            other => Err(CliError::Config(format!("unknown preset '{other}'"))),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub example: String,
    pub s_values: Vec<f64>,
    /// Mesh levels as powers of two.
    pub levels: Vec<u32>,
    pub reference_level: u32,
    pub preset: Preset,
    pub mode: GreedyMode,
    pub tol: f64,
    pub n_max: usize,
    pub out: PathBuf,
    pub variant: AlphaVariant,
    /// Upper end of the reaction range for constant-diffusion.
    pub mu_plus: f64,
    pub training_points: usize,
    pub truth_level: u32,
    pub repetitions: usize,
    /// Random test parameters for certification and timing.
    pub samples: usize,
}

impl RunConfig {
    /// Defaults for `command` and `preset`; `example` may still be overridden.
    pub fn preset(command: Command, preset: Preset, example: &str) -> Self {
        let (training_points, truth_level, n_max) = match (preset, example) {
            (Preset::Ci, "constant-diffusion") => (32, 7, 12),
            (Preset::Ci, _) => (4, 7, 12),
            (Preset::Full, "constant-diffusion") => (100, 9, 12),
            (Preset::Full, _) => (10, 9, 30),
        };
        let (truth_level, n_max) = match command {
            Command::Speedup => (8, 11),
            _ => (truth_level, n_max),
        };
        Self {
            command,
            example: example.to_string(),
            s_values: vec![1.8, 1.5, 1.2],
            levels: (4..=9).collect(),
            reference_level: 12,
            preset,
            mode: GreedyMode::Strong,
            // the constant-diffusion estimator drops below 1e-6 after three
            // snapshots, too few for a rate fit
            tol: if example == "constant-diffusion" { 1e-12 } else { fracrb::rbm::DEFAULT_TOL },
            n_max,
            out: PathBuf::from("out"),
            variant: AlphaVariant::Alpha,
            mu_plus: 1.0,
            training_points,
            truth_level,
            repetitions: 10,
            samples: 100,
        }
    }

    /// Canonical `key=value` listing; the config hash is taken over it.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let list = |v: &[String]| v.join(",");
        BTreeMap::from([
            ("command", self.command.name().to_string()),
            ("example", self.example.clone()),
            ("s", list(&self.s_values.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>())),
            ("levels", list(&self.levels.iter().map(u32::to_string).collect::<Vec<_>>())),
            ("reference-level", self.reference_level.to_string()),
            ("preset", self.preset.name().to_string()),
            ("mode", self.mode.name().to_string()),
            ("tol", format!("{:?}", self.tol)),
            ("n-max", self.n_max.to_string()),
            ("variant", self.variant.name().to_string()),
            ("mu-plus", format!("{:?}", self.mu_plus)),
            ("training-points", self.training_points.to_string()),
            ("truth-level", self.truth_level.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("samples", self.samples.to_string()),
        ])
    }

    /// First 16 hex digits of SHA-256 over the canonical listing. The output
    /// directory is not part of it.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(format!("{k}={v}\n"));
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "fracrb", about = "Fractional FEM and reduced basis experiments", version)]
pub struct Flags {
    /// convergence | constants | conditioning | greedy | speedup | verify
    pub command: Option<String>,
    /// ex1 | ex2 | ex3 | ex4 | greedy-case-1 | constant-diffusion
    #[arg(long)]
    pub example: Option<String>,
    /// Fractional order; repeat for several values.
    #[arg(long = "s")]
    pub s: Vec<f64>,
    /// Mesh levels as powers of two: `4..9` (inclusive) or `4,5,6`.
    #[arg(long)]
    pub levels: Option<String>,
    /// Level of the reference solution for examples without a closed form.
    #[arg(long)]
    pub reference_level: Option<u32>,
    /// ci | full
    #[arg(long)]
    pub preset: Option<String>,
    /// weak | strong
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// alpha | alpha-tilde | gamma
    #[arg(long)]
    pub variant: Option<String>,
    /// Upper end of the reaction range for constant-diffusion.
    #[arg(long)]
    pub mu_plus: Option<f64>,
    /// Gauss-Legendre training points per parameter dimension.
    #[arg(long)]
    pub training_points: Option<usize>,
    /// Truth mesh level (power of two).
    #[arg(long)]
    pub truth_level: Option<u32>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Random test parameters for certification and timing.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Plain-text `key=value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_levels(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Config(format!("cannot read levels '{text}'"));
    let levels: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if levels.is_empty() || levels.iter().any(|&l| !(1..=14).contains(&l)) {
        return Err(CliError::Config(format!("levels must be powers 1..14, got '{text}'")));
    }
    Ok(levels)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("bad value '{v}' for {key}")))
}

/// Reads a `key=value` file into flags; `#` starts a comment, `s` may list
/// several comma-separated values or repeat.
pub fn read_config_file(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut f = Flags::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {} of {} is not key=value", lineno + 1, path.display())))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim().to_string());
        match k.as_str() {
            "command" => f.command = Some(v),
            "example" => f.example = Some(v),
            "s" => {
                for part in v.split(',') {
                    f.s.push(parse_num("s", part)?);
                }
            }
            "levels" => f.levels = Some(v),
            "reference-level" => f.reference_level = Some(parse_num(&k, &v)?),
            "preset" => f.preset = Some(v),
            "mode" => f.mode = Some(v),
            "tol" => f.tol = Some(parse_num(&k, &v)?),
            "n-max" => f.n_max = Some(parse_num(&k, &v)?),
            "out" => f.out = Some(PathBuf::from(v)),
            "variant" => f.variant = Some(v),
            "mu-plus" => f.mu_plus = Some(parse_num(&k, &v)?),
            "training-points" => f.training_points = Some(parse_num(&k, &v)?),
            "truth-level" => f.truth_level = Some(parse_num(&k, &v)?),
            "repetitions" => f.repetitions = Some(parse_num(&k, &v)?),
            "samples" => f.samples = Some(parse_num(&k, &v)?),
            other => return Err(CliError::Config(format!("unknown config key '{other}'"))),
        }
    }
    Ok(f)
}

impl Flags {
    /// Fields set in `self` win over those in `base`.
    fn over(self, base: Flags) -> Flags {
        Flags {
            command: self.command.or(base.command),
            example: self.example.or(base.example),
            s: if self.s.is_empty() { base.s } else { self.s },
            levels: self.levels.or(base.levels),
            reference_level: self.reference_level.or(base.reference_level),
            preset: self.preset.or(base.preset),
            mode: self.mode.or(base.mode),
            tol: self.tol.or(base.tol),
            n_max: self.n_max.or(base.n_max),
            out: self.out.or(base.out),
            variant: self.variant.or(base.variant),
            mu_plus: self.mu_plus.or(base.mu_plus),
            training_points: self.training_points.or(base.training_points),
            truth_level: self.truth_level.or(base.truth_level),
            repetitions: self.repetitions.or(base.repetitions),
            samples: self.samples.or(base.samples),
            config: None,
        }
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let flags = match &self.config {
            Some(path) => {
                let file = read_config_file(path)?;
                self.over(file)
            }
            None => self,
        };
        let command = Command::parse(
            flags.command.as_deref().ok_or_else(|| CliError::Config("a command is required".into()))?,
        )?;
        let preset = flags.preset.as_deref().map(Preset::parse).transpose()?.unwrap_or(Preset::Ci);
        let example = flags.example.clone().unwrap_or_else(|| command.default_example().to_string());
        let mut cfg = RunConfig::preset(command, preset, &example);
        if !flags.s.is_empty() {
            cfg.s_values = flags.s.clone();
        }
        if let Some(l) = &flags.levels {
            cfg.levels = parse_levels(l)?;
        }
        if let Some(v) = flags.reference_level {
            cfg.reference_level = v;
        }
        if let Some(m) = &flags.mode {
            cfg.mode = GreedyMode::parse(m).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(v) = flags.tol {
            cfg.tol = v;
        }
        if let Some(v) = flags.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = flags.out {
            cfg.out = v;
        }
        if let Some(v) = &flags.variant {
            cfg.variant = AlphaVariant::parse(v).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(v) = flags.mu_plus {
            cfg.mu_plus = v;
        }
        if let Some(v) = flags.training_points {
            cfg.training_points = v;
        }
        if let Some(v) = flags.truth_level {
            cfg.truth_level = v;
        }
        if let Some(v) = flags.repetitions {
            cfg.repetitions = v;
        }
        if let Some(v) = flags.samples {
            cfg.samples = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        const EXAMPLES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "greedy-case-1", "constant-diffusion"];
        if !EXAMPLES.contains(&self.example.as_str()) {
            return err(format!("unknown example '{}'", self.example));
        }
        match self.command {
            Command::Convergence if !self.example.starts_with("ex") => {
                return err(format!("convergence needs ex1..ex4, got '{}'", self.example))
            }
            Command::Greedy | Command::Speedup if self.example.starts_with("ex") => {
                return err(format!("{} needs a parametric example, got '{}'", self.command.name(), self.example))
            }
            _ => {}
        }
        if self.s_values.is_empty() || self.s_values.iter().any(|&s| !(s > 1.0 && s < 2.0)) {
            return err(format!("every s must lie in (1, 2), got {:?}", self.s_values));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return err("levels must be strictly ascending".into());
        }
        if self.levels.len() < 3 {
            return err("at least three mesh levels are needed for a rate fit".into());
        }
        let finest = self.levels.last().copied().unwrap_or(0);
        if self.command == Command::Convergence && self.reference_level <= finest {
            return err(format!("reference level {} must exceed the finest level {finest}", self.reference_level));
        }
        if !(self.tol > 0.0) {
            return err(format!("tol must be positive, got {}", self.tol));
        }
        if self.n_max == 0 || self.training_points == 0 || self.samples == 0 {
            return err("n-max, training-points and samples must be positive".into());
        }
        if !(1..=12).contains(&self.truth_level) || !(1..=14).contains(&self.reference_level) {
            return err("truth level must lie in 1..12 and reference level in 1..14".into());
        }
        if self.repetitions < 10 {
            return err(format!("repetitions must be at least 10, got {}", self.repetitions));
        }
        if !(self.mu_plus > 0.0) {
            return err(format!("mu-plus must be positive, got {}", self.mu_plus));
        }
        Ok(())
    }
}
