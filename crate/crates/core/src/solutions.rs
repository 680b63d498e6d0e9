//! Reference solutions: closed forms for the unit-coefficient examples and the
//! constructed strong solution for variable diffusion without reaction.

use std::io::Write;

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::fractional::{frac_integral_power, FracOrder, PowerTerm};
use crate::quadrature::GaussRule;
use crate::special::{gamma_fn, recip_gamma};

/// `u(x) = Σ c_k x^{p_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    pub label: String,
    pub terms: Vec<PowerTerm>,
}

impl ClosedFormSolution {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }
}

/// Solution for `d ≡ 1`, `r ≡ 0`, `f ≡ 1`: `(x^{s-1} - x^s) / Γ(s+1)`.
pub fn ex1_solution(s: f64) -> Result<ClosedFormSolution> {
    FracOrder::new(s)?;
    let c = 1.0 / gamma_fn(s + 1.0)?;
    Ok(ClosedFormSolution {
        label: "ex1".into(),
        terms: vec![PowerTerm::new(c, s - 1.0)?, PowerTerm::new(-c, s)?],
    })
}

/// Solution for `d ≡ 1`, `r ≡ 0`, `f = x(1-x)`:
/// `(x^{s-1} - x^{s+1}) / Γ(s+2) - 2 (x^{s-1} - x^{s+2}) / Γ(s+3)`.
pub fn ex2_solution(s: f64) -> Result<ClosedFormSolution> {
    FracOrder::new(s)?;
    let a = 1.0 / gamma_fn(s + 2.0)?;
    let b = 2.0 / gamma_fn(s + 3.0)?;
    Ok(ClosedFormSolution {
        label: "ex2".into(),
        terms: vec![
            PowerTerm::new(a - b, s - 1.0)?,
            PowerTerm::new(-a, s + 1.0)?,
            PowerTerm::new(b, s + 2.0)?,
        ],
    })
}

/// Points of the evaluation grid.
pub const STRONG_GRID_POINTS: usize = 4096;
/// Agreement required between the two quadrature orders.
pub const RULE_AGREEMENT: f64 = 1e-8;
const ORDERS: [usize; 2] = [24, 32];
const MAX_GRADING: usize = 60;

/// `u = -g + g(1) p` with `g = I^β(d⁻¹ I^β f)`, `ρ = I^β(d⁻¹ x^{β-1})`,
/// `p = ρ / ρ(1)`, sampled on a Chebyshev grid.
#[derive(Debug, Clone)]
pub struct StrongSolution {
    pub order: FracOrder,
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// `g(1) = (𝓘_d^s f)(1)`.
    pub scale: f64,
    /// `u(x) / x^{s-1}`, which stays bounded at the origin; interpolated
    /// instead of `u` itself.
    reduced: MonotoneCubic,
}

impl StrongSolution {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        x.powf(self.order.s() - 1.0) * self.reduced.eval(x)
    }

    /// Two-column CSV `x,u` on the evaluation grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,u")?;
        for (x, u) in self.grid.iter().zip(&self.u) {
            writeln!(out, "{x:.16e},{u:.16e}")?;
        }
        Ok(())
    }
}

/// Builds the strong solution of `-D_d^s u = f`, `u(0) = u(1) = 0`.
///
/// Every fractional integral `1/Γ(σ) ∫_0^x (x-t)^{σ-1} t^e φ(t) dt` is split
/// at the coefficient breakpoints; segments touching 0 or `x` absorb the
/// algebraic weights into Gauss-Jacobi rules, and segments ending just short
/// of `x` are graded geometrically towards it. The inner integral `I^β f` is
/// exact for power-sum loads and nested quadrature otherwise. The whole
/// construction runs at two rule orders which must agree.
pub fn build_strong_solution(d: &Coefficient, f: &Coefficient, s: f64) -> Result<StrongSolution> {
    let order = FracOrder::new(s)?;
    let beta = order.beta();
    let n = STRONG_GRID_POINTS;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            let v = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos());
            if i == 0 {
                0.0
            } else if i == n - 1 {
                1.0
            } else {
                v
            }
        })
        .collect();
    for &x in &grid {
        let v = d.eval(x);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::CoefficientSign { x, value: v });
        }
    }
    let mut breaks: Vec<f64> = d.breakpoints().iter().chain(f.breakpoints()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // I^β f = t^{e_f} H(t) with H smooth
    let load_terms = f.power_terms();
    let lead = load_terms
        .as_ref()
        .map(|terms| terms.iter().map(|t| t.exponent).fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0);
    let lead = if lead.is_finite() { lead } else { 0.0 };
    let integrated = match &load_terms {
        Some(terms) => Some(
            terms
                .iter()
                .map(|&t| frac_integral_power(t, beta))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let e_g = beta + lead;

    let mut samples = Vec::with_capacity(2);
    for &points in &ORDERS {
        let rules = Rules::new(points, beta, e_g)?;
        let inner_rules = Rules::new(points, beta, 0.0)?;
        let h_reduced = |t: f64| -> f64 {
            match &integrated {
                Some(terms) => terms.iter().map(|q| q.coefficient * t.powf(q.exponent - e_g)).sum(),
                None => {
                    if t <= 0.0 {
                        return f.eval(0.0) * recip_gamma(beta + 1.0);
                    }
                    rl_integral(t, &inner_rules, 0.0, &|y| f.eval(y), f.breakpoints()) / t.powf(beta)
                }
            }
        };
        let phi_g = |t: f64| h_reduced(t) / d.eval(t);
        let phi_rho = |t: f64| 1.0 / d.eval(t);
        let rho_rules = Rules::new(points, beta, beta - 1.0)?;
        let mut g = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        for &x in &grid {
            g.push(rl_integral(x, &rules, e_g, &phi_g, &breaks));
            rho.push(rl_integral(x, &rho_rules, beta - 1.0, &phi_rho, &breaks));
        }
        samples.push((g, rho));
    }
    let (g, rho) = samples.swap_remove(1);
    let (g_low, rho_low) = &samples[0];
    for i in 0..n {
        let dg = (g[i] - g_low[i]).abs() / g[i].abs().max(1.0);
        let dr = (rho[i] - rho_low[i]).abs() / rho[i].abs().max(1.0);
        if dg.max(dr) > RULE_AGREEMENT {
            return Err(Error::QuadratureMismatch { x: grid[i], difference: dg.max(dr) });
        }
    }

    let rho_one = rho[n - 1];
    let scale = g[n - 1];
    let p: Vec<f64> = rho.iter().map(|r| r / rho_one).collect();
    let u: Vec<f64> = g.iter().zip(&p).map(|(g, p)| -g + scale * p).collect();
    let mut reduced_values: Vec<f64> = grid
        .iter()
        .zip(&u)
        .map(|(&x, &u)| if x > 0.0 { u / x.powf(s - 1.0) } else { 0.0 })
        .collect();
    reduced_values[0] = reduced_values[1];
    let reduced = MonotoneCubic::new(grid.clone(), reduced_values)?;
    Ok(StrongSolution { order, grid, g, p, u, scale, reduced })
}

struct Rules {
    sigma: f64,
    legendre: GaussRule,
    /// weight `(t - 0)^e (x - t)^{σ-1}`
    both: GaussRule,
    /// weight `t^e`
    left: GaussRule,
    /// weight `(x - t)^{σ-1}`
    right: GaussRule,
}

impl Rules {
    fn new(points: usize, sigma: f64, e: f64) -> Result<Self> {
        Ok(Self {
            sigma,
            legendre: GaussRule::legendre(points)?,
            both: GaussRule::jacobi(points, e, sigma - 1.0)?,
            left: GaussRule::jacobi(points, e, 0.0)?,
            right: GaussRule::jacobi(points, 0.0, sigma - 1.0)?,
        })
    }
}

/// `1/Γ(σ) ∫_0^x (x-t)^{σ-1} t^e φ(t) dt` with `φ` smooth between `breaks`.
fn rl_integral(x: f64, rules: &Rules, e: f64, phi: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let sigma = rules.sigma;
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < x));
    edges.push(x);
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let at_origin = lo == 0.0;
        if hi == x {
            acc += if at_origin {
                rules.both.integrate(lo, hi, phi)
            } else {
                rules.right.integrate(lo, hi, |t| t.powf(e) * phi(t))
            };
            continue;
        }
        // Kernel is smooth on [lo, hi] but may be nearly singular at hi:
        // cut at hi - L/2, hi - L/4, ... until panels are no wider than
        // their distance to x.
        let full = |t: f64| (x - t).powf(sigma - 1.0) * t.powf(e) * phi(t);
        let gap = x - hi;
        let mut cuts = vec![lo];
        let mut width = 0.5 * (hi - lo);
        while width > gap && cuts.len() <= MAX_GRADING {
            cuts.push(hi - width);
            width *= 0.5;
        }
        cuts.push(hi);
        for (k, panel) in cuts.windows(2).enumerate() {
            acc += if k == 0 && at_origin {
                rules.left.integrate(panel[0], panel[1], |t| (x - t).powf(sigma - 1.0) * phi(t))
            } else {
                rules.legendre.integrate(panel[0], panel[1], full)
            };
        }
    }
    acc * recip_gamma(sigma)
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Size(format!("interpolation needs matching data of length >= 2, got {} and {}", n, y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("interpolation nodes must increase strictly".into()));
        }
        let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secant[i - 1], secant[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        Ok(Self { x, y, slopes })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}
