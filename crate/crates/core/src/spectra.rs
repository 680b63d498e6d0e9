//! Extreme singular values of stiffness matrices under mesh refinement.

use std::io::Write;

use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::fractional::FracOrder;
use crate::mesh::build_mesh;
use crate::problem::Example;
use crate::rates::slope;

/// All singular values, descending.
pub fn singular_values(a: &DenseOperator) -> Result<Vec<f64>> {
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    a.to_mat().singular_values().map_err(|_| Error::SvdConvergence)
}

/// Stiffness families of the conditioning study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Unit diffusion, no reaction.
    A1,
    /// Smooth coefficients of Ex3.
    A2,
    /// Piecewise-constant coefficients of Ex4.
    A3,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::A1, Family::A2, Family::A3];

    pub fn name(self) -> &'static str {
        match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
        }
    }

    pub fn example(self) -> Example {
        match self {
            Self::A1 => Example::Ex1,
            Self::A2 => Example::Ex3,
            Self::A3 => Example::Ex4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub n_elements: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub family: Family,
    pub s: f64,
    pub rows: Vec<SpectrumRow>,
    /// Log-log slopes against `N`, fitted without the coarsest level.
    pub sigma_max_slope: f64,
    pub sigma_min_slope: f64,
}

impl SpectrumReport {
    /// Smallest `c` with `κ ≤ c N^s / α` on every level.
    pub fn bound_constant(&self, alpha: f64) -> f64 {
        self.rows
            .iter()
            .map(|r| r.kappa * alpha / (r.n_elements as f64).powf(self.s))
            .fold(0.0, f64::max)
    }

    /// CSV `N,sigma_max,sigma_min,kappa` with the fitted slopes in a trailing
    /// comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,sigma_max,sigma_min,kappa")?;
        for r in &self.rows {
            writeln!(out, "{},{:.6e},{:.6e},{:.6e}", r.n_elements, r.sigma_max, r.sigma_min, r.kappa)?;
        }
        writeln!(
            out,
            "# slope_sigma_max={:.6} slope_sigma_min={:.6}",
            self.sigma_max_slope, self.sigma_min_slope
        )?;
        Ok(())
    }
}

pub fn spectrum_row(a: &DenseOperator, n_elements: usize) -> Result<SpectrumRow> {
    let sv = singular_values(a)?;
    let sigma_max = sv[0];
    let sigma_min = *sv.last().expect("non-empty matrix");
    Ok(SpectrumRow { n_elements, sigma_max, sigma_min, kappa: sigma_max / sigma_min })
}

/// Fits slopes over all rows but the first.
pub fn fit_slopes(rows: &[SpectrumRow]) -> Result<(f64, f64)> {
    let tail = rows.get(1..).unwrap_or(&[]);
    let x: Vec<f64> = tail.iter().map(|r| (r.n_elements as f64).ln()).collect();
    let ymax: Vec<f64> = tail.iter().map(|r| r.sigma_max.ln()).collect();
    let ymin: Vec<f64> = tail.iter().map(|r| r.sigma_min.ln()).collect();
    Ok((slope(&x, &ymax)?, slope(&x, &ymin)?))
}

pub fn condition_study(family: Family, s: f64, levels: &[usize]) -> Result<SpectrumReport> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("levels must be ascending".into()));
    }
    if levels.len() < 3 {
        return Err(Error::Size(format!("a slope fit needs at least 3 levels, got {}", levels.len())));
    }
    let problem = family.example().problem(FracOrder::new(s)?);
    let rows = levels
        .iter()
        .map(|&n| spectrum_row(&problem.stiffness(&build_mesh(n)?)?, n))
        .collect::<Result<Vec<_>>>()?;
    let (sigma_max_slope, sigma_min_slope) = fit_slopes(&rows)?;
    Ok(SpectrumReport { family, s, rows, sigma_max_slope, sigma_min_slope })
}
