//! Explicit well-posedness constants in terms of the coefficient ranges.

use std::f64::consts::{LN_2, PI};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::fractional::FracOrder;
use crate::special::gamma_fn;

/// Samples used when a coefficient has no exact bounds (plus both endpoints).
pub const STAT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientStats {
    pub sup: f64,
    pub inf: f64,
    /// `(sup + inf) / 2`
    pub average: f64,
    /// `(sup - inf) / 2`
    pub range: f64,
    /// True when sup/inf come from sampling rather than the exact shape.
    pub sampled: bool,
}

impl CoefficientStats {
    pub fn from_bounds(inf: f64, sup: f64, sampled: bool) -> Self {
        Self { sup, inf, average: 0.5 * (sup + inf), range: 0.5 * (sup - inf), sampled }
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup.abs().max(self.inf.abs())
    }
}

pub fn coefficient_stats(c: &Coefficient) -> CoefficientStats {
    if let Some((lo, hi)) = c.exact_bounds() {
        return CoefficientStats::from_bounds(lo, hi, false);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=STAT_SAMPLES {
        let v = c.eval(k as f64 / STAT_SAMPLES as f64);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    CoefficientStats::from_bounds(lo, hi, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSet {
    /// `γ = d̄ |cos(sπ/2)| - d_r`
    pub gamma_sd: f64,
    /// `c = γ Γ(s/2+1)² + r̲`; the problem is coercive when `c ≥ 0`.
    pub c_sdr: f64,
    /// `α = γ Γ(s/2+1)⁴ / 8`
    pub alpha_sd: f64,
    /// `α̃ = γ Γ(s/2+1)² / 2 + min(r̲, 0) / 2`
    pub alpha_tilde: f64,
    /// `C = 2 (‖d‖_∞ + ‖r‖_∞)`
    pub continuity: f64,
}

impl ConstantSet {
    pub fn is_coercive(&self) -> bool {
        self.c_sdr >= 0.0
    }

    pub fn alpha(&self, variant: AlphaVariant) -> f64 {
        match variant {
            AlphaVariant::Alpha => self.alpha_sd,
            AlphaVariant::AlphaTilde => self.alpha_tilde,
            AlphaVariant::Gamma => self.gamma_sd,
        }
    }
}

pub fn constant_set(s: f64, d: &CoefficientStats, r: &CoefficientStats) -> Result<ConstantSet> {
    FracOrder::new(s)?;
    let gamma_sd = d.average * (0.5 * s * PI).cos().abs() - d.range;
    let g2 = gamma_fn(0.5 * s + 1.0)?.powi(2);
    Ok(ConstantSet {
        gamma_sd,
        c_sdr: gamma_sd * g2 + r.inf,
        alpha_sd: gamma_sd * g2 * g2 / 8.0,
        alpha_tilde: 0.5 * gamma_sd * g2 + 0.5 * r.inf.min(0.0),
        continuity: 2.0 * (d.sup_abs() + r.sup_abs()),
    })
}

/// Which lower bound certifies the reduced basis error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AlphaVariant {
    #[default]
    Alpha,
    AlphaTilde,
    Gamma,
}

impl AlphaVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::AlphaTilde => "alpha-tilde",
            Self::Gamma => "gamma",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "alpha" => Ok(Self::Alpha),
            "alpha-tilde" => Ok(Self::AlphaTilde),
            "gamma" => Ok(Self::Gamma),
            other => Err(Error::Config(format!("unknown coercivity variant '{other}'"))),
        }
    }
}

/// Predicted Kolmogorov-width decay for `-D^s u + μ u = f`, `μ ∈ [0, μ⁺]`:
/// `M_s = ⌈μ⁺ / α_s⌉` with `α_s = |cos(sπ/2)|` and rate `ln 2 / M_s`.
pub fn predicted_nwidth_rate(s: f64, mu_plus: f64) -> Result<(usize, f64)> {
    FracOrder::new(s)?;
    if !(mu_plus > 0.0) {
        return Err(Error::Domain(format!("parameter bound must be positive, got {mu_plus}")));
    }
    let alpha_s = (0.5 * s * PI).cos().abs();
    let m = (mu_plus / alpha_s).ceil() as usize;
    Ok((m, LN_2 / m as f64))
}
