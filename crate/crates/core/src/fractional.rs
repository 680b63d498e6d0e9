//! Riemann-Liouville fractional integrals and derivatives in closed form.
//!
//! Two families of functions are covered exactly: power terms `c x^p` and
//! continuous piecewise-linear functions. For the latter we write
//! `f(x) = Σ σ_k (x - x_k)_+` with slope jumps `σ_k`; since `f` vanishes outside
//! (0, 1) the same function also equals `Σ σ_k (x_k - x)_+`, which gives the
//! right-sided operators.

use crate::error::{Error, Result};
use crate::mesh::PiecewiseLinearFn;
use crate::special::{gamma_fn, recip_gamma};

/// Order `s ∈ (1, 2)` of the problem together with `β = s/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    s: f64,
    beta: f64,
}

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 1.0 && s < 2.0) {
            return Err(Error::Domain(format!("order s must lie in (1, 2), got {s}")));
        }
        Ok(Self { s, beta: 0.5 * s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `cos(πβ)`, strictly negative for admissible orders.
    pub fn cos_pi_beta(&self) -> f64 {
        (std::f64::consts::PI * self.beta).cos()
    }
}

/// The term `coefficient · x^exponent` on (0, ∞).
///
/// Exponents only need to exceed -1 (local integrability); square
/// integrability near zero additionally requires exponent > -1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0) || !coefficient.is_finite() {
            return Err(Error::Domain(format!(
                "power term needs a finite coefficient and exponent > -1, got {coefficient} x^{exponent}"
            )));
        }
        Ok(Self { coefficient, exponent })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.coefficient == 0.0 {
            return 0.0;
        }
        if self.exponent == 0.0 {
            return self.coefficient;
        }
        self.coefficient * x.powf(self.exponent)
    }

    pub fn is_square_integrable(&self) -> bool {
        self.coefficient == 0.0 || self.exponent > -0.5
    }
}

/// `I^σ (c x^p) = c Γ(p+1)/Γ(p+1+σ) x^{p+σ}`.
pub fn frac_integral_power(t: PowerTerm, sigma: f64) -> Result<PowerTerm> {
    if !(t.exponent > -1.0) {
        return Err(Error::Domain(format!(
            "fractional integral needs exponent > -1, got {}",
            t.exponent
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("integration order must be positive, got {sigma}")));
    }
    let p = t.exponent;
    let factor = gamma_fn(p + 1.0)? / gamma_fn(p + 1.0 + sigma)?;
    Ok(PowerTerm { coefficient: t.coefficient * factor, exponent: p + sigma })
}

/// `D^β (c x^p) = c Γ(p+1)/Γ(p+1-β) x^{p-β}` for `β ∈ (0, 1)`.
///
/// When `p + 1 - β` is a non-positive integer the result is the zero term.
/// Arguments within 1e-12 of such a pole are snapped onto it, so that
/// `D^{s/2} x^{s/2-1}` vanishes exactly despite rounding in `s/2 - 1`.
pub fn frac_deriv_power(t: PowerTerm, beta: f64) -> Result<PowerTerm> {
    if !(t.exponent > -1.0) {
        return Err(Error::Domain(format!(
            "fractional derivative needs exponent > -1, got {}",
            t.exponent
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("derivative order must lie in (0, 1), got {beta}")));
    }
    let p = t.exponent;
    let arg = p + 1.0 - beta;
    let exponent = p - beta;
    if arg <= 0.5 && (arg - arg.round()).abs() < 1e-12 {
        return Ok(PowerTerm { coefficient: 0.0, exponent });
    }
    let factor = gamma_fn(p + 1.0)? * recip_gamma(arg);
    Ok(PowerTerm { coefficient: t.coefficient * factor, exponent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Evaluates `Σ σ_k (±(x - x_k))_+^{1+ν} / Γ(2+ν)`: the left or right
/// Riemann-Liouville operator of order `-ν` applied to a piecewise-linear
/// function. `ν > 0` is an integral, `ν = -β` a derivative.
fn pl_operator(f: &PiecewiseLinearFn, side: Side, nu: f64, x: f64) -> f64 {
    let exponent = 1.0 + nu;
    let scale = recip_gamma(2.0 + nu);
    let mut acc = 0.0;
    for (xk, jump) in f.slope_jumps() {
        let dist = match side {
            Side::Left => x - xk,
            Side::Right => xk - x,
        };
        if dist > 0.0 {
            acc += jump * dist.powf(exponent);
        }
    }
    scale * acc
}

/// Left (`D^β f`) or right (`D̄^β f`) fractional derivative of a
/// piecewise-linear function at `x`, exact up to rounding.
///
/// At a node the value is the one-sided limit from inside the support of the
/// kernel, which here coincides with the value itself since both sides are
/// continuous.
pub fn frac_deriv_pl(f: &PiecewiseLinearFn, side: Side, beta: f64, x: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("derivative order must lie in (0, 1), got {beta}")));
    }
    check_point(x)?;
    Ok(pl_operator(f, side, -beta, x))
}

/// Left (`I^σ f`) or right (`Ī^σ f`) fractional integral of a piecewise-linear
/// function at `x`.
pub fn frac_integral_pl(f: &PiecewiseLinearFn, side: Side, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("integration order must be positive, got {sigma}")));
    }
    check_point(x)?;
    Ok(pl_operator(f, side, sigma, x))
}

fn check_point(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("evaluation point {x} outside [0, 1]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::quadrature::GaussRule;
    use crate::special::gamma_fn;
    use proptest::prelude::*;

    /// Definition of the left integral, `1/Γ(σ) ∫_0^x (x-t)^{σ-1} t^p dt`,
    /// evaluated with a Gauss-Jacobi rule carrying both endpoint weights.
    fn integral_oracle(p: f64, sigma: f64, x: f64) -> f64 {
        let rule = GaussRule::jacobi(12, p, sigma - 1.0).unwrap();
        rule.integrate(0.0, x, |_| 1.0) / gamma_fn(sigma).unwrap()
    }

    /// `D^β t^p = I^{1-β}(p t^{p-1})` by quadrature of the defining integral.
    fn deriv_oracle(p: f64, beta: f64, x: f64) -> f64 {
        p * integral_oracle(p - 1.0, 1.0 - beta, x)
    }

    #[test]
    fn order_bounds() {
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(2.0).is_err());
        let o = FracOrder::new(1.5).unwrap();
        assert_eq!(o.beta(), 0.75);
        assert!(o.cos_pi_beta() < 0.0);
    }

    #[test]
    fn integral_of_constant_matches_definition() {
        let s = 1.7;
        let t = frac_integral_power(PowerTerm::new(1.0, 0.0).unwrap(), s).unwrap();
        assert!((t.exponent - s).abs() < 1e-15);
        assert!((t.coefficient - 1.0 / gamma_fn(s + 1.0).unwrap()).abs() < 1e-14);
        for x in [0.2, 0.5, 0.9] {
            assert!((t.eval(x) - integral_oracle(0.0, s, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn integral_of_singular_term_is_constant() {
        for s in [1.2, 1.5, 1.8] {
            let t = PowerTerm::new(1.0, 0.5 * s - 1.0).unwrap();
            let out = frac_integral_power(t, 1.0 - 0.5 * s).unwrap();
            assert!(out.exponent.abs() < 1e-15);
            assert!((out.coefficient - gamma_fn(0.5 * s).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn first_order_integral_is_antiderivative() {
        let out = frac_integral_power(PowerTerm::new(2.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((out.coefficient - 1.0).abs() < 1e-14);
        assert!((out.exponent - 2.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_annihilates_homogeneous_term() {
        for s in [1.2, 1.5, 1.8, 1.37] {
            let t = PowerTerm::new(1.0, 0.5 * s - 1.0).unwrap();
            let out = frac_deriv_power(t, 0.5 * s).unwrap();
            assert_eq!(out.coefficient, 0.0);
        }
    }

    #[test]
    fn derivative_of_linear_term() {
        let out = frac_deriv_power(PowerTerm::new(1.0, 1.0).unwrap(), 0.5).unwrap();
        let want = 2.0 / std::f64::consts::PI.sqrt();
        assert!((out.coefficient - want).abs() < 1e-14);
        assert!((out.exponent - 0.5).abs() < 1e-15);
        for x in [0.1, 0.6] {
            assert!((out.eval(x) - deriv_oracle(1.0, 0.5, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_square_root() {
        let out = frac_deriv_power(PowerTerm::new(1.0, 0.5).unwrap(), 0.9).unwrap();
        let want = gamma_fn(1.5).unwrap() / gamma_fn(0.6).unwrap();
        assert!((out.coefficient - want).abs() < 1e-14);
        assert!((out.exponent + 0.4).abs() < 1e-15);
        for x in [0.3, 0.8] {
            assert!((out.eval(x) - deriv_oracle(0.5, 0.9, x)).abs() < 1e-11);
        }
    }

    #[test]
    fn power_rules_reject_bad_exponents() {
        let bad = PowerTerm { coefficient: 1.0, exponent: -1.0 };
        assert!(frac_integral_power(bad, 0.5).is_err());
        assert!(frac_deriv_power(bad, 0.5).is_err());
        assert!(PowerTerm::new(1.0, -1.2).is_err());
    }

    fn hat(n: usize, node: usize) -> PiecewiseLinearFn {
        let mesh = build_mesh(n).unwrap();
        let mut c = vec![0.0; n - 1];
        c[node - 1] = 1.0;
        PiecewiseLinearFn::new(mesh, c).unwrap()
    }

    /// `D^β φ(x) = 1/Γ(1-β) ∫_0^x (x-t)^{-β} φ'(t) dt` with φ' piecewise
    /// constant; each piece `[a, b]` is `∫_a^x - ∫_b^x` under a Jacobi weight.
    fn hat_deriv_oracle(f: &PiecewiseLinearFn, beta: f64, x: f64) -> f64 {
        let rule = GaussRule::jacobi(6, 0.0, -beta).unwrap();
        let mesh = f.mesh();
        let mut acc = 0.0;
        for m in 0..mesh.n_elements() {
            let a = mesh.node(m);
            if a >= x {
                break;
            }
            let b = mesh.node(m + 1).min(x);
            let slope = (f.nodal_value(m + 1) - f.nodal_value(m)) * mesh.n_elements() as f64;
            let piece = rule.integrate(a, x, |_| 1.0)
                - if b < x { rule.integrate(b, x, |_| 1.0) } else { 0.0 };
            acc += slope * piece;
        }
        acc / gamma_fn(1.0 - beta).unwrap()
    }

    #[test]
    fn hat_derivative_matches_definition() {
        let f = hat(4, 1);
        let got = frac_deriv_pl(&f, Side::Left, 0.75, 0.6).unwrap();
        let want = hat_deriv_oracle(&f, 0.75, 0.6);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn left_derivative_is_causal() {
        let f = hat(8, 5);
        for x in [0.0, 0.2, 0.5] {
            assert_eq!(frac_deriv_pl(&f, Side::Left, 0.7, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn interpolant_derivative_converges_to_power_rule() {
        // f = x - x²
        let beta = 0.7;
        let want = frac_deriv_power(PowerTerm::new(1.0, 1.0).unwrap(), beta).unwrap().eval(0.5)
            - frac_deriv_power(PowerTerm::new(1.0, 2.0).unwrap(), beta).unwrap().eval(0.5);
        let mut previous = f64::INFINITY;
        for n in [16, 64, 256, 1024] {
            let f = PiecewiseLinearFn::interpolate(build_mesh(n).unwrap(), |x| x * (1.0 - x));
            let err = (frac_deriv_pl(&f, Side::Left, beta, 0.5).unwrap() - want).abs();
            assert!(err < previous);
            previous = err;
        }
        assert!(previous < 2e-4);
    }

    #[test]
    fn pl_operators_check_arguments() {
        let f = hat(4, 2);
        assert!(frac_deriv_pl(&f, Side::Left, 1.0, 0.5).is_err());
        assert!(frac_deriv_pl(&f, Side::Left, 0.6, 1.5).is_err());
        assert!(frac_integral_pl(&f, Side::Right, 0.0, 0.5).is_err());
    }

    /// Integral of a product whose factors have algebraic kinks at mesh nodes,
    /// with geometric grading towards both ends of each element.
    fn graded_product(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let rule = GaussRule::legendre(16).unwrap();
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for m in 0..n {
            let (a, b) = (m as f64 * h, (m + 1) as f64 * h);
            let mid = 0.5 * (a + b);
            let lo = a;
            let mut hi = mid;
            // left half graded towards a, right half towards b
            for _ in 0..30 {
                let cut = lo + 0.5 * (hi - lo);
                acc += rule.integrate(cut, hi, &f);
                hi = cut;
            }
            acc += rule.integrate(lo, hi, &f);
            let mut lo = mid;
            let hi = b;
            for _ in 0..30 {
                let cut = hi - 0.5 * (hi - lo);
                acc += rule.integrate(lo, cut, &f);
                lo = cut;
            }
            acc += rule.integrate(lo, hi, &f);
        }
        acc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn integral_semigroup(
            c in -3.0f64..3.0,
            p in -0.9f64..2.0,
            s1 in 0.01f64..2.0,
            s2 in 0.01f64..2.0,
        ) {
            let t = PowerTerm::new(c, p).unwrap();
            let twice = frac_integral_power(frac_integral_power(t, s1).unwrap(), s2).unwrap();
            let once = frac_integral_power(t, s1 + s2).unwrap();
            prop_assert!((twice.exponent - once.exponent).abs() < 1e-12);
            let scale = once.coefficient.abs().max(1e-300);
            prop_assert!((twice.coefficient - once.coefficient).abs() <= 1e-12 * scale);
        }

        #[test]
        fn derivative_is_left_inverse(
            c in -3.0f64..3.0,
            p in -0.49f64..2.0,
            beta in 0.5f64..0.99,
        ) {
            let t = PowerTerm::new(c, p).unwrap();
            let back = frac_deriv_power(frac_integral_power(t, beta).unwrap(), beta).unwrap();
            prop_assert!((back.exponent - p).abs() < 1e-12);
            prop_assert!((back.coefficient - c).abs() <= 1e-12 * c.abs().max(1e-300));
        }

        #[test]
        fn mirror_symmetry(
            vals in prop::collection::vec(-2.0f64..2.0, 3..10),
            x in 0.0f64..1.0,
            beta in 0.51f64..0.99,
        ) {
            let mesh = build_mesh(vals.len() + 1).unwrap();
            let f = PiecewiseLinearFn::new(mesh, vals).unwrap();
            let g = f.mirrored();
            let left = frac_deriv_pl(&f, Side::Left, beta, x).unwrap();
            let right = frac_deriv_pl(&g, Side::Right, beta, 1.0 - x).unwrap();
            prop_assert!((left - right).abs() < 1e-12 * (1.0 + left.abs()));
        }

        #[test]
        fn causality(
            n in 4usize..20,
            node_frac in 0.2f64..1.0,
            beta in 0.51f64..0.99,
            t in 0.0f64..1.0,
        ) {
            let node = ((node_frac * (n - 1) as f64) as usize).clamp(1, n - 1);
            let f = hat(n, node);
            let start = f.support_start().unwrap();
            let x = start * t;
            prop_assert_eq!(frac_deriv_pl(&f, Side::Left, beta, x).unwrap(), 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn integral_adjointness(
            a in prop::collection::vec(-1.0f64..1.0, 5),
            b in prop::collection::vec(-1.0f64..1.0, 5),
            sigma in 0.1f64..1.5,
        ) {
            let mesh = build_mesh(6).unwrap();
            let phi = PiecewiseLinearFn::new(mesh, a).unwrap();
            let psi = PiecewiseLinearFn::new(mesh, b).unwrap();
            let lhs = graded_product(
                |x| frac_integral_pl(&phi, Side::Left, sigma, x).unwrap() * psi.eval(x), 6);
            let rhs = graded_product(
                |x| phi.eval(x) * frac_integral_pl(&psi, Side::Right, sigma, x).unwrap(), 6);
            prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
        }
    }
}
