//! Property suite for the operator calculus and the reduced basis machinery.
//!
//! Every check compares against something computed independently: Gauss-Jacobi
//! quadrature of the defining integrals, brute-force quadrature of the
//! semi-norm on a truncated line, or truth solves.

use std::time::Instant;

use fracrb::assembly::assemble_diffusion;
use fracrb::coefficient::Coefficient;
use fracrb::fractional::{frac_deriv_pl, frac_deriv_power, frac_integral_pl, frac_integral_power, PowerTerm, Side};
use fracrb::mesh::{build_mesh, PiecewiseLinearFn};
use fracrb::quadrature::{graded_integral, graded_integral_left, GaussRule};
use fracrb::rbm::{direct_residual_norm, true_error, AffineProblem, ReducedModel};
use fracrb::report::{Check, ExperimentReport, Table};
use fracrb::special::{gamma_fn, recip_gamma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiments::train;
use crate::{random_parameters, CliError, RunConfig, SEED};

const POWERS: [f64; 4] = [-0.4, 0.0, 0.5, 1.3];
const ORDERS: [f64; 3] = [0.25, 0.6, 1.1];
const BETAS: [f64; 3] = [0.55, 0.75, 0.95];

/// `1/Γ(σ) ∫_0^x (x-t)^{σ-1} c t^p dt`, exact for a Jacobi rule carrying both weights.
fn integral_by_quadrature(t: PowerTerm, sigma: f64, x: f64) -> fracrb::Result<f64> {
    let rule = GaussRule::jacobi(8, t.exponent, sigma - 1.0)?;
    Ok(t.coefficient * rule.integrate(0.0, x, |_| 1.0) / gamma_fn(sigma)?)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn semigroup() -> fracrb::Result<f64> {
    let mut worst: f64 = 0.0;
    for p in POWERS {
        let t = PowerTerm::new(1.7, p)?;
        for s1 in ORDERS {
            for s2 in ORDERS {
                let twice = frac_integral_power(frac_integral_power(t, s2)?, s1)?;
                let once = frac_integral_power(t, s1 + s2)?;
                worst = worst.max((twice.exponent - once.exponent).abs());
                for x in [0.3, 0.9] {
                    let inner = frac_integral_power(t, s2)?;
                    let oracle = integral_by_quadrature(inner, s1, x)?;
                    worst = worst.max(relative(twice.eval(x), oracle)).max(relative(once.eval(x), oracle));
                }
            }
        }
    }
    // piecewise-linear functions: nested integrals of the kink terms
    let f = random_pl(8, 1);
    for s1 in ORDERS {
        for s2 in ORDERS {
            for x in [0.31, 0.77, 1.0] {
                let once = frac_integral_pl(&f, Side::Left, s1 + s2, x)?;
                let mut twice = 0.0;
                for (xk, jump) in f.slope_jumps() {
                    if x > xk {
                        let inner = frac_integral_power(PowerTerm::new(jump * recip_gamma(2.0 + s2), 1.0 + s2)?, s1)?;
                        twice += inner.eval(x - xk);
                    }
                }
                worst = worst.max((once - twice).abs() / once.abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

fn left_inverse() -> fracrb::Result<f64> {
    let mut worst: f64 = 0.0;
    for p in POWERS {
        let t = PowerTerm::new(-0.8, p)?;
        for beta in BETAS {
            let lifted = frac_integral_power(t, beta)?;
            let back = frac_deriv_power(lifted, beta)?;
            worst = worst.max(relative(back.coefficient, t.coefficient)).max((back.exponent - p).abs());
            // D^β g = I^{1-β} g' by quadrature
            let q = lifted.exponent;
            let slope = PowerTerm::new(lifted.coefficient * q, q - 1.0)?;
            for x in [0.2, 0.85] {
                worst = worst.max(relative(integral_by_quadrature(slope, 1.0 - beta, x)?, t.eval(x)));
            }
        }
    }
    Ok(worst)
}

fn random_pl(n: usize, seed: u64) -> PiecewiseLinearFn {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ seed);
    let c = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    PiecewiseLinearFn::new(build_mesh(n).expect("n ≥ 1"), c).expect("length matches")
}

/// Integral over (0, 1) graded towards every mesh node.
fn graded_over_elements(n: usize, g: impl Fn(f64) -> f64) -> fracrb::Result<f64> {
    let rule = GaussRule::legendre(16)?;
    let h = 1.0 / n as f64;
    Ok((0..n).map(|m| graded_integral(&g, m as f64 * h, (m + 1) as f64 * h, 30, &rule)).sum())
}

fn adjointness() -> fracrb::Result<f64> {
    let n = 6;
    let mut worst: f64 = 0.0;
    for (k, sigma) in [0.2, 0.7, 1.4].into_iter().enumerate() {
        let phi = random_pl(n, 10 + k as u64);
        let psi = random_pl(n, 20 + k as u64);
        let lhs = graded_over_elements(n, |x| frac_integral_pl(&phi, Side::Left, sigma, x).unwrap_or(f64::NAN) * psi.eval(x))?;
        let rhs = graded_over_elements(n, |x| phi.eval(x) * frac_integral_pl(&psi, Side::Right, sigma, x).unwrap_or(f64::NAN))?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    Ok(worst)
}

/// Largest |value| of a left derivative before the support starts, and of a
/// right derivative after it ends; both must be exactly zero.
fn causality() -> fracrb::Result<f64> {
    let n = 16;
    let mesh = build_mesh(n)?;
    let mut worst: f64 = 0.0;
    for node in [1, 5, 11, 15] {
        let mut c = vec![0.0; n - 1];
        c[node - 1] = 1.0;
        let hat = PiecewiseLinearFn::new(mesh, c)?;
        let start = hat.support_start().unwrap_or(0.0);
        let end = mesh.node(node + 1);
        for beta in BETAS {
            for k in 0..=20 {
                let t = k as f64 / 20.0;
                worst = worst.max(frac_deriv_pl(&hat, Side::Left, beta, start * t)?.abs());
                worst = worst.max(frac_deriv_pl(&hat, Side::Right, beta, end + (1.0 - end) * t)?.abs());
            }
        }
    }
    Ok(worst)
}

/// `‖D^β u‖²_{L²(ℝ)}` with the integral over (1, ∞) truncated at 2^12 and
/// the remainder taken from the leading term `c x^{-1-β}` of the tail.
fn seminorm_on_line(u: &PiecewiseLinearFn, beta: f64) -> fracrb::Result<f64> {
    let rule = GaussRule::legendre(16)?;
    let n = u.mesh().n_elements();
    let jumps = u.slope_jumps();
    let scale = recip_gamma(2.0 - beta);
    let outside = |x: f64| scale * jumps.iter().map(|&(xk, j)| j * (x - xk).powf(1.0 - beta)).sum::<f64>();
    let inside = graded_over_elements(n, |x| frac_deriv_pl(u, Side::Left, beta, x).unwrap_or(f64::NAN).powi(2))?;
    let mut tail = graded_integral_left(|x| outside(x).powi(2), 1.0, 2.0, 30, &rule);
    let mut lo = 2.0;
    while lo < 4096.0 {
        tail += rule.integrate(lo, 2.0 * lo, |x| outside(x).powi(2));
        lo *= 2.0;
    }
    let a = 1.0 - beta;
    let second_moment: f64 = jumps.iter().map(|&(xk, j)| j * xk * xk).sum();
    let c = scale * 0.5 * a * (a - 1.0) * second_moment;
    tail += c * c * lo.powf(-1.0 - 2.0 * beta) / (1.0 + 2.0 * beta);
    Ok(inside + tail)
}

fn cosine_identity() -> fracrb::Result<f64> {
    let n = 8;
    let mut worst: f64 = 0.0;
    for (k, beta) in BETAS.into_iter().enumerate() {
        let u = random_pl(n, 30 + k as u64);
        let a = assemble_diffusion(u.mesh(), beta, &Coefficient::Constant(1.0))?;
        let lhs = a.quadratic_form(u.coeffs());
        let rhs = -(std::f64::consts::PI * beta).cos() * seminorm_on_line(&u, beta)?;
        worst = worst.max(relative(lhs, rhs));
    }
    Ok(worst)
}

struct ModelChecks {
    affine: f64,
    orthonormality: f64,
    residual: f64,
    certification_margin: f64,
    snapshot: f64,
}

/// Rebuilds the model one snapshot at a time so that every basis size is
/// certified on the same random parameters.
fn model_checks(problem: &AffineProblem, model: &ReducedModel, samples: usize) -> fracrb::Result<ModelChecks> {
    let mus = random_parameters(&problem.parameter_box, samples, SEED);
    let mut affine: f64 = 0.0;
    for mu in mus.iter().take(5) {
        affine = affine.max(problem.affine_consistency(mu)?);
    }
    let mut residual: f64 = 0.0;
    let mut margin = f64::INFINITY;
    let mut partial = ReducedModel::empty(problem)?;
    for (k, mu_k) in model.selected.iter().enumerate() {
        partial.add_snapshot(problem, problem.truth_solve(mu_k)?.coeffs(), mu_k)?;
        for (i, mu) in mus.iter().enumerate() {
            let est = partial.estimate(mu)?;
            let err = true_error(problem, &partial, mu, &est.coefficients)?;
            margin = margin.min(est.delta + 1e-8 - err);
            if i < 20 || k + 1 == model.selected.len() {
                let direct = direct_residual_norm(problem, mu, &partial.lift_coefficients(&est.coefficients))?;
                residual = residual.max(relative(est.residual_norm, direct));
            }
        }
    }
    let mut snapshot: f64 = 0.0;
    for mu in &model.selected {
        let est = model.estimate(mu)?;
        snapshot = snapshot.max(true_error(problem, model, mu, &est.coefficients)?);
    }
    Ok(ModelChecks {
        affine,
        orthonormality: model.orthonormality_defect(problem),
        residual,
        certification_margin: margin,
        snapshot,
    })
}

pub fn run_verify(cfg: &RunConfig) -> Result<ExperimentReport, CliError> {
    let start = Instant::now();
    let mut report = ExperimentReport::new("verify");
    report.checks.push(Check::at_most("semigroup", semigroup()?, 1e-12));
    report.checks.push(Check::at_most("left_inverse", left_inverse()?, 1e-12));
    report.checks.push(Check::at_most("adjointness", adjointness()?, 1e-8));
    report.checks.push(Check::at_most("causality", causality()?, 0.0));
    report.checks.push(Check::at_most("cosine_identity", cosine_identity()?, 0.01));

    let mut table = Table::new(
        "reduced_basis",
        &["s", "n", "affine_consistency", "orthonormality", "residual_mismatch", "certification_margin", "snapshot_error"],
    );
    for &s in &cfg.s_values {
        let t = train(cfg, s, cfg.truth_level)?;
        let m = model_checks(&t.problem, &t.model, cfg.samples)?;
        table.push(vec![
            s.into(),
            t.model.size().into(),
            m.affine.into(),
            m.orthonormality.into(),
            m.residual.into(),
            m.certification_margin.into(),
            m.snapshot.into(),
        ])?;
        let tag = format!("s{s}");
        report.checks.push(Check::at_most(format!("{tag}_affine_consistency"), m.affine, 1e-12));
        report.checks.push(Check::at_most(format!("{tag}_orthonormality"), m.orthonormality, 1e-10));
        report.checks.push(Check::at_most(format!("{tag}_offline_online_residual"), m.residual, 1e-6));
        report.checks.push(Check::at_least(format!("{tag}_certified_bound_margin"), m.certification_margin, 0.0));
        report.checks.push(Check::at_most(format!("{tag}_snapshot_reproduction"), m.snapshot, 1e-8));
    }
    report.tables.push(table);
    report.add_summary("seconds", start.elapsed().as_secs_f64());
    Ok(report)
}
