//! Mesh-refinement studies of the finite element error.

use crate::constants::{coefficient_stats, constant_set};
use crate::error::{Error, Result};
use crate::fractional::FracOrder;
use crate::mesh::build_mesh;
use crate::norms::{exact_errors, fe_error, NormGrams, NormKind};
use crate::problem::Example;
use crate::rates::{algebraic_rate, pairwise_rates};
use crate::solutions::{ex1_solution, ex2_solution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_elements: usize,
    pub l2: f64,
    pub seminorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Closed-form solution, errors computed without a reference mesh.
    Exact,
    /// Finite element solution on a finer nested mesh.
    Discrete { n_elements: usize },
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub example: Example,
    pub s: f64,
    pub reference: Reference,
    pub coercive: bool,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted over all levels but the coarsest.
    pub l2_rate: f64,
    pub seminorm_rate: f64,
}

impl ConvergenceStudy {
    pub fn l2_pairwise(&self) -> Vec<f64> {
        let (n, e) = self.series(NormKind::L2);
        pairwise_rates(&n, &e)
    }

    pub fn seminorm_pairwise(&self) -> Vec<f64> {
        let (n, e) = self.series(NormKind::Seminorm);
        pairwise_rates(&n, &e)
    }

    fn series(&self, kind: NormKind) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows.iter().map(|r| r.n_elements as f64).collect();
        let e = self
            .rows
            .iter()
            .map(|r| if kind == NormKind::L2 { r.l2 } else { r.seminorm })
            .collect();
        (n, e)
    }
}

/// Theoretical semi-norm rate `s/2 - 1/2`.
pub fn predicted_seminorm_rate(s: f64) -> f64 {
    0.5 * s - 0.5
}

/// Observed L² rate `s - 1/2`.
pub fn observed_l2_rate(s: f64) -> f64 {
    s - 0.5
}

/// Runs one example at one order over `levels` (numbers of elements).
/// Examples without a closed form are measured against a solution on
/// `reference_elements`, which must be a multiple of every level.
pub fn convergence_study(
    example: Example,
    s: f64,
    levels: &[usize],
    reference_elements: usize,
) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::Size(format!("a rate fit needs at least 3 levels, got {}", levels.len())));
    }
    let order = FracOrder::new(s)?;
    let problem = example.problem(order);
    let constants = constant_set(
        s,
        &coefficient_stats(&problem.diffusion),
        &coefficient_stats(&problem.reaction),
    )?;
    let mut rows = Vec::with_capacity(levels.len());
    let reference = if example.has_closed_form() {
        let exact = match example {
            Example::Ex1 => ex1_solution(s)?,
            _ => ex2_solution(s)?,
        };
        let load = problem.load.power_terms().expect("closed-form loads are power sums");
        for &n in levels {
            let system = problem.assemble(&build_mesh(n)?)?;
            let u_h = system.solve()?;
            let e = exact_errors(&u_h, order, &exact.terms, &load, &system)?;
            rows.push(ConvergenceRow { n_elements: n, l2: e.l2, seminorm: e.seminorm });
        }
        Reference::Exact
    } else {
        let fine = build_mesh(reference_elements)?;
        for &n in levels {
            build_mesh(n)?.refinement_factor(&fine)?;
        }
        let u_ref = problem.solve(&fine)?;
        let grams = NormGrams::new(fine, order.beta())?;
        for &n in levels {
            let u_h = problem.solve(&build_mesh(n)?)?;
            rows.push(ConvergenceRow {
                n_elements: n,
                l2: fe_error(&u_h, &u_ref, NormKind::L2, &grams)?,
                seminorm: fe_error(&u_h, &u_ref, NormKind::Seminorm, &grams)?,
            });
        }
        Reference::Discrete { n_elements: reference_elements }
    };
    let tail = &rows[1..];
    let n: Vec<f64> = tail.iter().map(|r| r.n_elements as f64).collect();
    let l2: Vec<f64> = tail.iter().map(|r| r.l2).collect();
    let semi: Vec<f64> = tail.iter().map(|r| r.seminorm).collect();
    Ok(ConvergenceStudy {
        example,
        s,
        reference,
        coercive: constants.is_coercive(),
        l2_rate: algebraic_rate(&n, &l2)?,
        seminorm_rate: algebraic_rate(&n, &semi)?,
        rows,
    })
}
