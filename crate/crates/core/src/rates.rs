//! Least-squares rate fits.

use crate::error::{Error, Result};

/// Algebraic rate `r` in `e ≈ C N^{-r}`, fitted by least squares on
/// `(log N, log e)`.
pub fn algebraic_rate(n: &[f64], e: &[f64]) -> Result<f64> {
    let x: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    Ok(-slope(&x, &y)?)
}

/// Exponential rate `ρ` in `e ≈ C exp(-ρ n)`, fitted by least squares on
/// `(n, log e)`.
pub fn exponential_rate(n: &[f64], e: &[f64]) -> Result<f64> {
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    Ok(-slope(n, &y)?)
}

/// Rates between consecutive entries, `log(e_k/e_{k+1}) / log(N_{k+1}/N_k)`.
pub fn pairwise_rates(n: &[f64], e: &[f64]) -> Vec<f64> {
    n.windows(2)
        .zip(e.windows(2))
        .map(|(nw, ew)| (ew[0] / ew[1]).ln() / (nw[1] / nw[0]).ln())
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Size(format!(
            "a slope needs at least two matching points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite data in rate fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn recovers_exact_power_laws(c in 0.01f64..100.0, r in -2.0f64..3.0) {
            let n = [16.0, 32.0, 64.0, 128.0];
            let e: Vec<f64> = n.iter().map(|v: &f64| c * v.powf(-r)).collect();
            prop_assert!((algebraic_rate(&n, &e).unwrap() - r).abs() < 1e-10);
            for p in pairwise_rates(&n, &e) {
                prop_assert!((p - r).abs() < 1e-10);
            }
        }

        #[test]
        fn recovers_exponentials(c in 0.01f64..100.0, rho in 0.01f64..5.0) {
            let n = [1.0, 2.0, 3.0, 4.0, 5.0];
            let e: Vec<f64> = n.iter().map(|v| c * (-rho * v).exp()).collect();
            prop_assert!((exponential_rate(&n, &e).unwrap() - rho).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(slope(&[1.0], &[1.0]).is_err());
        assert!(slope(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(algebraic_rate(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
