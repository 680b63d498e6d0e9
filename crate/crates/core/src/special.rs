//! Gamma function and friends.
//!
//! Lanczos approximation with g = 7 and nine coefficients; relative error is
//! around 1e-15 on the positive axis. Arguments below 1/2 go through the
//! reflection formula, which the fractional derivative rules need for
//! exponents in (-1, 0).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(gamma_unchecked(x))
}

/// Γ(x) for any real x that is not a non-positive integer.
///
/// Returns ±∞ at the poles.
pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        return PI / (s * gamma_unchecked(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// 1/Γ(x), entire: exactly zero at 0, −1, −2, …
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(πx) Γ(1-x) / π
        return (PI * x).sin() * gamma_unchecked(1.0 - x) / PI;
    }
    1.0 / gamma_unchecked(x)
}

/// Euler beta function B(a, b) for a, b > 0.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(a + b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: shift the argument past 30 with the recurrence and
    /// use the Stirling series there.
    fn stirling_oracle(x: f64) -> f64 {
        let mut shift = 1.0;
        let mut z = x;
        while z < 30.0 {
            shift *= z;
            z += 1.0;
        }
        let inv = 1.0 / z;
        let inv2 = inv * inv;
        // Bernoulli terms B_{2k}/(2k(2k-1) z^{2k-1})
        let series = inv
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 360.0
                        - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
        let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
        ln.exp() / shift
    }

    #[test]
    fn integer_values() {
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() < 24.0 * 1e-14);
    }

    #[test]
    fn matches_stirling_oracle_on_working_range() {
        let mut x = 0.1;
        while x <= 20.0 {
            let got = gamma_fn(x).unwrap();
            let want = stirling_oracle(x);
            assert!(
                ((got - want) / want).abs() <= 1e-12,
                "x = {x}: {got} vs {want}"
            );
            x += 0.037;
        }
    }

    #[test]
    fn gamma_of_one_point_nine() {
        let want = stirling_oracle(1.9);
        assert!((want - 0.961_765_8).abs() < 1e-7);
        assert!((gamma_fn(1.9).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn half_integer_closed_form() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma_fn(0.5).unwrap() - sqrt_pi).abs() < 1e-14);
        assert!((gamma_fn(2.5).unwrap() - 0.75 * sqrt_pi).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn reciprocal_vanishes_at_poles() {
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-3.0), 0.0);
        // Γ(-1/2) = -2√π
        assert!((recip_gamma(-0.5) + 1.0 / (2.0 * PI.sqrt())).abs() < 1e-14);
        assert!((recip_gamma(3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_matches_integral_identity() {
        // B(2, 3) = 1/12
        assert!((beta_fn(2.0, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }
}
