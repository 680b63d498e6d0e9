//! Coefficient functions d(x), r(x), f(x) on [0, 1].
//!
//! Shapes with known structure keep it, so that bounds are exact and the
//! assembly can take fast paths for piecewise-constant diffusion.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractional::PowerTerm;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `values[i]` on `[breaks[i-1], breaks[i])`, right-continuous, with
    /// `breaks` strictly inside (0, 1).
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// `intercept + slope · x`.
    Affine { intercept: f64, slope: f64 },
    /// Sum of power terms `Σ c_k x^{p_k}`.
    Powers(Vec<PowerTerm>),
    /// Arbitrary closure; bounds are estimated by sampling.
    Sampled { label: String, f: ScalarFn },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(fmt, "Constant({c})"),
            Self::PiecewiseConstant { breaks, values } => {
                write!(fmt, "PiecewiseConstant {{ breaks: {breaks:?}, values: {values:?} }}")
            }
            Self::Affine { intercept, slope } => write!(fmt, "Affine({intercept} + {slope} x)"),
            Self::Powers(terms) => write!(fmt, "Powers({terms:?})"),
            Self::Sampled { label, .. } => write!(fmt, "Sampled({label})"),
        }
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self::Constant(c)
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::Size(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        let sorted = breaks.windows(2).all(|w| w[0] < w[1]);
        let inside = breaks.iter().all(|&b| b > 0.0 && b < 1.0);
        if !sorted || !inside {
            return Err(Error::Domain(format!(
                "breakpoints must be increasing and inside (0, 1): {breaks:?}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("piecewise values must be finite".into()));
        }
        Ok(Self::PiecewiseConstant { breaks, values })
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::Affine { intercept, slope }
    }

    pub fn powers(terms: Vec<PowerTerm>) -> Self {
        Self::Powers(terms)
    }

    pub fn sampled(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Sampled { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::PiecewiseConstant { breaks, values } => {
                let idx = breaks.partition_point(|&b| b <= x);
                values[idx]
            }
            Self::Affine { intercept, slope } => intercept + slope * x,
            Self::Powers(terms) => terms.iter().map(|t| t.eval(x)).sum(),
            Self::Sampled { f, .. } => f(x),
        }
    }

    /// Exact `(inf, sup)` over [0, 1] where the shape allows it.
    pub fn exact_bounds(&self) -> Option<(f64, f64)> {
        match self {
            Self::Constant(c) => Some((*c, *c)),
            Self::PiecewiseConstant { values, .. } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
            Self::Affine { intercept, slope } => {
                let (a, b) = (*intercept, intercept + slope);
                Some((a.min(b), a.max(b)))
            }
            Self::Powers(terms) => match terms.as_slice() {
                [] => Some((0.0, 0.0)),
                [t] if t.exponent >= 0.0 => {
                    let (a, b) = (t.eval(0.0), t.eval(1.0));
                    Some((a.min(b), a.max(b)))
                }
                _ => None,
            },
            Self::Sampled { .. } => None,
        }
    }

    /// Pieces `(start, end, value)` covering [0, 1] when the coefficient is
    /// piecewise constant (a constant is one piece).
    pub fn constant_pieces(&self) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            Self::Constant(c) => Some(vec![(0.0, 1.0, *c)]),
            Self::PiecewiseConstant { breaks, values } => {
                let mut edges = Vec::with_capacity(breaks.len() + 2);
                edges.push(0.0);
                edges.extend_from_slice(breaks);
                edges.push(1.0);
                Some(
                    edges
                        .windows(2)
                        .zip(values)
                        .map(|(w, &v)| (w[0], w[1], v))
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Interior points where the coefficient may be discontinuous.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::PiecewiseConstant { breaks, .. } => breaks,
            _ => &[],
        }
    }

    /// Representation as a sum of power terms, if the shape has one.
    pub fn power_terms(&self) -> Option<Vec<PowerTerm>> {
        match self {
            Self::Constant(c) => Some(vec![PowerTerm { coefficient: *c, exponent: 0.0 }]),
            Self::Affine { intercept, slope } => Some(vec![
                PowerTerm { coefficient: *intercept, exponent: 0.0 },
                PowerTerm { coefficient: *slope, exponent: 1.0 },
            ]),
            Self::Powers(terms) => Some(terms.clone()),
            _ => None,
        }
    }

    /// `Σ w_k c_k`, keeping the shape when all parts are piecewise constant
    /// or all are affine; otherwise a sampled closure.
    pub fn linear_combination(parts: &[(f64, &Coefficient)]) -> Coefficient {
        if let [(w, c)] = parts {
            if *w == 1.0 {
                return (*c).clone();
            }
        }
        let all_pieces: Option<Vec<_>> = parts.iter().map(|(_, c)| c.constant_pieces()).collect();
        if let Some(pieces) = all_pieces {
            let mut breaks: Vec<f64> = parts.iter().flat_map(|(_, c)| c.breakpoints().iter().copied()).collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            if breaks.is_empty() {
                let total = parts.iter().zip(&pieces).map(|((w, _), p)| w * p[0].2).sum();
                return Coefficient::Constant(total);
            }
            let mut edges = vec![0.0];
            edges.extend_from_slice(&breaks);
            edges.push(1.0);
            let values = edges
                .windows(2)
                .map(|e| {
                    let mid = 0.5 * (e[0] + e[1]);
                    parts.iter().map(|(w, c)| w * c.eval(mid)).sum()
                })
                .collect();
            return Coefficient::PiecewiseConstant { breaks, values };
        }
        let affine: Option<Vec<(f64, f64)>> = parts
            .iter()
            .map(|(w, c)| match c {
                Coefficient::Constant(v) => Some((w * v, 0.0)),
                Coefficient::Affine { intercept, slope } => Some((w * intercept, w * slope)),
                _ => None,
            })
            .collect();
        if let Some(terms) = affine {
            let (a, b) = terms.iter().fold((0.0, 0.0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
            return Coefficient::Affine { intercept: a, slope: b };
        }
        let owned: Vec<(f64, Coefficient)> = parts.iter().map(|(w, c)| (*w, (*c).clone())).collect();
        Coefficient::sampled("linear combination", move |x| owned.iter().map(|(w, c)| w * c.eval(x)).sum())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant(c) => *c == 0.0,
            Self::PiecewiseConstant { values, .. } => values.iter().all(|&v| v == 0.0),
            Self::Affine { intercept, slope } => *intercept == 0.0 && *slope == 0.0,
            Self::Powers(terms) => terms.iter().all(|t| t.coefficient == 0.0),
            Self::Sampled { .. } => false,
        }
    }
}

/// `x(1 - x)` as a sum of power terms.
pub fn bubble() -> Coefficient {
    Coefficient::Powers(vec![
        PowerTerm { coefficient: 1.0, exponent: 1.0 },
        PowerTerm { coefficient: -1.0, exponent: 2.0 },
    ])
}

/// Indicator of `[a, b)` (closed at 1 when `b = 1`).
pub fn indicator(a: f64, b: f64) -> Result<Coefficient> {
    let mut breaks = Vec::new();
    let mut values = Vec::new();
    if a > 0.0 {
        breaks.push(a);
        values.push(0.0);
    }
    values.push(1.0);
    if b < 1.0 {
        breaks.push(b);
        values.push(0.0);
    }
    Coefficient::piecewise_constant(breaks, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_evaluation_is_right_continuous() {
        let d = Coefficient::piecewise_constant(vec![0.5], vec![5.0, 3.0]).unwrap();
        assert_eq!(d.eval(0.49), 5.0);
        assert_eq!(d.eval(0.5), 3.0);
        assert_eq!(d.eval(1.0), 3.0);
        assert_eq!(d.exact_bounds(), Some((3.0, 5.0)));
    }

    #[test]
    fn malformed_pieces_are_rejected() {
        assert!(Coefficient::piecewise_constant(vec![0.5], vec![1.0]).is_err());
        assert!(Coefficient::piecewise_constant(vec![0.6, 0.4], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Coefficient::piecewise_constant(vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn indicators_cover_quarters() {
        let quarters: Vec<Coefficient> = (0..4)
            .map(|k| indicator(0.25 * k as f64, 0.25 * (k + 1) as f64).unwrap())
            .collect();
        for x in [0.0, 0.1, 0.25, 0.3, 0.5, 0.74, 0.75, 1.0] {
            let total: f64 = quarters.iter().map(|q| q.eval(x)).sum();
            assert_eq!(total, 1.0);
        }
        assert_eq!(quarters[0].breakpoints(), &[0.25]);
        assert_eq!(quarters[3].breakpoints(), &[0.75]);
    }

    #[test]
    fn affine_bounds_are_exact() {
        assert_eq!(Coefficient::affine(1.0, -3.0).exact_bounds(), Some((-2.0, 1.0)));
    }

    #[test]
    fn bubble_values() {
        let f = bubble();
        assert!((f.eval(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(f.eval(0.0), 0.0);
        assert!(f.exact_bounds().is_none());
    }

    #[test]
    fn combinations_keep_their_shape() {
        let q: Vec<Coefficient> = (0..4)
            .map(|k| indicator(0.25 * k as f64, 0.25 * (k + 1) as f64).unwrap())
            .collect();
        let w = [1.0, 0.7, 1.3, 0.9];
        let parts: Vec<(f64, &Coefficient)> = w.iter().copied().zip(q.iter()).collect();
        let d = Coefficient::linear_combination(&parts);
        assert_eq!(d.breakpoints(), &[0.25, 0.5, 0.75]);
        assert_eq!(d.exact_bounds(), Some((0.7, 1.3)));
        assert_eq!(d.eval(0.6), 1.3);

        let x = Coefficient::affine(0.0, 1.0);
        let one = Coefficient::Constant(1.0);
        let r = Coefficient::linear_combination(&[(0.5, &one), (2.0, &x)]);
        assert_eq!(r.exact_bounds(), Some((0.5, 2.5)));

        let mixed = Coefficient::linear_combination(&[(1.0, &q[0]), (1.0, &x)]);
        assert!((mixed.eval(0.1) - 1.1).abs() < 1e-15);
        assert!(mixed.exact_bounds().is_none());
    }

    #[test]
    fn sampled_closure() {
        let d = Coefficient::sampled("4+sin", |x| 4.0 + (2.0 * std::f64::consts::PI * x).sin());
        assert!((d.eval(0.25) - 5.0).abs() < 1e-15);
        assert!(d.exact_bounds().is_none());
        assert!(d.constant_pieces().is_none());
        assert_eq!(format!("{d:?}"), "Sampled(4+sin)");
    }
}
