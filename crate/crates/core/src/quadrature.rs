//! Gauss-Legendre and Gauss-Jacobi rules on the unit interval.
//!
//! Nodes and weights come from the Golub-Welsch eigenproblem of the Jacobi
//! matrix. A rule with exponents (`left`, `right`) integrates
//! `t^left (1-t)^right g(t)` over (0, 1) exactly for polynomial `g` of degree
//! below `2n`.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::special::beta_fn;

/// A Gauss rule on (0, 1) for the weight `t^left (1 - t)^right`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    left: f64,
    right: f64,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Result<Self> {
        Self::jacobi(n, 0.0, 0.0)
    }

    /// Gauss-Jacobi rule absorbing `t^left` at 0 and `(1-t)^right` at 1.
    pub fn jacobi(n: usize, left: f64, right: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Size("a Gauss rule needs at least one node".into()));
        }
        if !(left > -1.0 && right > -1.0) {
            return Err(Error::Domain(format!(
                "Jacobi exponents must exceed -1, got ({left}, {right})"
            )));
        }
        // Recurrence on [-1, 1] for (1-x)^a (1+x)^b; t = (1+x)/2 maps b to the left end.
        let (a, b) = (right, left);
        let ab = a + b;
        let mut jac = Mat::<f64>::zeros(n, n);
        jac[(0, 0)] = (b - a) / (ab + 2.0);
        for k in 1..n {
            let kf = k as f64;
            let two_k_ab = 2.0 * kf + ab;
            jac[(k, k)] = (b * b - a * a) / (two_k_ab * (two_k_ab + 2.0));
            let off_sq = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab)
                    / (two_k_ab * two_k_ab * (two_k_ab + 1.0) * (two_k_ab - 1.0))
            };
            let off = off_sq.sqrt();
            jac[(k, k - 1)] = off;
            jac[(k - 1, k)] = off;
        }
        let eig = jac
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Domain("Golub-Welsch eigenproblem failed".into()))?;
        let mass = beta_fn(left + 1.0, right + 1.0)?;
        let values = eig.S().column_vector();
        let vectors = eig.U();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = vectors[(0, i)];
                (0.5 * (1.0 + values[i]), mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights, left, right })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn left_exponent(&self) -> f64 {
        self.left
    }

    pub fn right_exponent(&self) -> f64 {
        self.right
    }

    /// `∫_a^b (x-a)^left (b-x)^right g(x) dx`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        let scale = len.powf(1.0 + self.left + self.right);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(a + len * t))
            .sum();
        scale * sum
    }

    fn try_integrate(&self, a: f64, b: f64, g: &mut impl FnMut(f64) -> f64) -> Result<f64> {
        let len = b - a;
        let mut sum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = a + len * t;
            let y = g(x);
            if !y.is_finite() {
                return Err(Error::NonFiniteSample { x });
            }
            sum += w * y;
        }
        Ok(len.powf(1.0 + self.left + self.right) * sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureKind {
    GaussLegendre,
    /// Endpoint weight `(x-a)^left (b-x)^right` absorbed into the rule.
    GaussJacobi { left: f64, right: f64 },
}

/// Composite rule: `panels` equal panels with `points_per_panel` nodes each.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    points_per_panel: usize,
    panels: usize,
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, points_per_panel: usize, panels: usize) -> Result<Self> {
        if points_per_panel == 0 || panels == 0 {
            return Err(Error::Size(
                "quadrature needs at least one point and one panel".into(),
            ));
        }
        if let QuadratureKind::GaussJacobi { left, right } = kind {
            if !(left > -1.0 && right > -1.0) {
                return Err(Error::Domain(format!(
                    "Jacobi exponents must exceed -1, got ({left}, {right})"
                )));
            }
        }
        Ok(Self { kind, points_per_panel, panels })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn points_per_panel(&self) -> usize {
        self.points_per_panel
    }

    pub fn panels(&self) -> usize {
        self.panels
    }
}

/// Integrates `w(x) g(x)` over `(a, b)` where `w` is the rule's endpoint weight
/// (identically one for Gauss-Legendre).
///
/// For Gauss-Jacobi the singular factors are absorbed on the first and last
/// panels; interior panels see them as ordinary smooth factors.
pub fn composite_quadrature(
    mut g: impl FnMut(f64) -> f64,
    interval: (f64, f64),
    rule: &QuadratureRule,
) -> Result<f64> {
    let (a, b) = interval;
    if !(b > a) {
        return Err(Error::Domain(format!("empty interval ({a}, {b})")));
    }
    let (left, right) = match rule.kind {
        QuadratureKind::GaussLegendre => (0.0, 0.0),
        QuadratureKind::GaussJacobi { left, right } => (left, right),
    };
    let n = rule.points_per_panel;
    let panels = rule.panels;
    let width = (b - a) / panels as f64;

    if panels == 1 {
        return GaussRule::jacobi(n, left, right)?.try_integrate(a, b, &mut g);
    }

    let interior = GaussRule::legendre(n)?;
    let first = GaussRule::jacobi(n, left, 0.0)?;
    let last = GaussRule::jacobi(n, 0.0, right)?;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        total += if p == 0 {
            first.try_integrate(lo, hi, &mut |x| g(x) * (b - x).powf(right))?
        } else if p + 1 == panels {
            last.try_integrate(lo, hi, &mut |x| g(x) * (x - a).powf(left))?
        } else {
            interior.try_integrate(lo, hi, &mut |x| {
                g(x) * (x - a).powf(left) * (b - x).powf(right)
            })?
        };
    }
    Ok(total)
}

/// `∫_a^b g` with panels halving geometrically towards both ends, for
/// integrands with algebraic endpoint singularities of unknown strength.
/// `levels` panels are placed on each half; the innermost panels are left
/// to the rule as they are, so the innermost error scales like
/// `(2^{-levels} (b - a))^{1+p}` for a singularity of order `p`.
pub fn graded_integral(g: impl Fn(f64) -> f64, a: f64, b: f64, levels: usize, rule: &GaussRule) -> f64 {
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    let mut hi = mid;
    for _ in 0..levels {
        let cut = a + 0.5 * (hi - a);
        acc += rule.integrate(cut, hi, &g);
        hi = cut;
    }
    acc += rule.integrate(a, hi, &g);
    let mut lo = mid;
    for _ in 0..levels {
        let cut = b - 0.5 * (b - lo);
        acc += rule.integrate(lo, cut, &g);
        lo = cut;
    }
    acc + rule.integrate(lo, b, &g)
}

/// Like [`graded_integral`] but grading only towards `a`.
pub fn graded_integral_left(g: impl Fn(f64) -> f64, a: f64, b: f64, levels: usize, rule: &GaussRule) -> f64 {
    let mut acc = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let cut = a + 0.5 * (hi - a);
        acc += rule.integrate(cut, hi, &g);
        hi = cut;
    }
    acc + rule.integrate(a, hi, &g)
}
