//! Reduced basis spaces, online solves and the residual-based error bound.

use crate::constants::AlphaVariant;
use crate::dense::{dot, solve_small, DenseOperator};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, PiecewiseLinearFn};

use super::affine::{AffineProblem, ParametricCoefficients, ThetaFn};

/// Relative size below which a new residual direction is treated as dependent.
const RESIDUAL_RANK_TOL: f64 = 1e-13;
/// Relative size of the orthogonal remainder that counts as stagnation.
pub const STAGNATION_TOL: f64 = 1e-10;

/// Riesz representers of the residual components kept as `W = Q R` with
/// `Qᵀ G Q = I`, so `‖W v‖_G = ‖R v‖₂` holds without forming `vᵀ WᵀGW v`.
#[derive(Debug, Clone, Default)]
pub struct ResidualFactor {
    q: Vec<Vec<f64>>,
    gq: Vec<Vec<f64>>,
    /// Column `k` of `R`, as long as the rank when it was added.
    pub columns: Vec<Vec<f64>>,
}

impl ResidualFactor {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        Self { q: Vec::new(), gq: Vec::new(), columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn push(&mut self, mut w: Vec<f64>, gram: &DenseOperator) {
        let original = gram.quadratic_form(&w).max(0.0).sqrt();
        let mut coeffs = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (j, (q, gq)) in self.q.iter().zip(&self.gq).enumerate() {
                let c = dot(gq, &w);
                coeffs[j] += c;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let rest = gram.quadratic_form(&w).max(0.0).sqrt();
        if original > 0.0 && rest > RESIDUAL_RANK_TOL * original {
            w.iter_mut().for_each(|v| *v /= rest);
            self.gq.push(gram.matvec(&w));
            self.q.push(w);
            coeffs.push(rest);
        }
        self.columns.push(coeffs);
    }

    /// `‖R v‖₂`
    pub fn norm(&self, v: &[f64]) -> f64 {
        let mut y = vec![0.0; self.rank()];
        for (col, &vk) in self.columns.iter().zip(v) {
            for (yi, r) in y.iter_mut().zip(col) {
                *yi += vk * r;
            }
        }
        dot(&y, &y).sqrt()
    }

    /// Gram blocks `RᵀR` of the representers in the V-inner product.
    pub fn gram_blocks(&self) -> DenseOperator {
        let k = self.len();
        DenseOperator::from_fn(k, k, |a, b| {
            self.columns[a].iter().zip(&self.columns[b]).map(|(x, y)| x * y).sum()
        })
    }
}

/// Reduced space `V_n` with everything needed for `N`-independent online solves.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub name: String,
    pub mesh: Mesh,
    pub variant: AlphaVariant,
    pub parameter_box: Vec<(f64, f64)>,
    pub coefficients: ParametricCoefficients,
    /// Diffusion thetas followed by reaction thetas.
    pub operator_thetas: Vec<ThetaFn>,
    pub load_thetas: Vec<ThetaFn>,
    /// G-orthonormal basis vectors `ξ_i`.
    pub basis: Vec<Vec<f64>>,
    /// `Â_q[i][j] = ξ_iᵀ A_q ξ_j`, one `n × n` matrix per operator term.
    pub reduced_operators: Vec<DenseOperator>,
    /// `f̂_q[i] = ξ_iᵀ f_q`
    pub reduced_loads: Vec<Vec<f64>>,
    /// Load representers first, then `A_q ξ_i` for each basis vector and term.
    pub residual: ResidualFactor,
    pub selected: Vec<Vec<f64>>,
    /// Cached `A_q ξ_i`, needed to extend the model; empty after loading.
    applied: Vec<Vec<Vec<f64>>>,
    gram_basis: Vec<Vec<f64>>,
}

/// Output of [`rb_solve`].
#[derive(Debug, Clone)]
pub struct RbSolution {
    pub coefficients: Vec<f64>,
    pub u_n: PiecewiseLinearFn,
    /// Certified bound `Δ_n(μ) = ‖ϱ_n(μ)‖_{V'} / α(μ)`.
    pub delta: f64,
    pub residual_norm: f64,
    pub alpha: f64,
}

/// Reduced coefficients and the error bound without lifting to the mesh.
#[derive(Debug, Clone)]
pub struct OnlineEstimate {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl ReducedModel {
    /// Empty space (`n = 0`) with the load representers in place.
    pub fn empty(problem: &AffineProblem) -> Result<Self> {
        let mut residual = ResidualFactor::default();
        for term in &problem.load {
            residual.push(problem.riesz(&term.discrete), &problem.gram);
        }
        Ok(Self {
            name: problem.name.clone(),
            mesh: problem.mesh,
            variant: problem.variant,
            parameter_box: problem.parameter_box.clone(),
            coefficients: problem.coefficients(),
            operator_thetas: problem.operator_terms().map(|t| t.theta).collect(),
            load_thetas: problem.load.iter().map(|t| t.theta).collect(),
            basis: Vec::new(),
            reduced_operators: vec![DenseOperator::zeros(0, 0); problem.n_operator_terms()],
            reduced_loads: vec![Vec::new(); problem.load.len()],
            residual,
            selected: Vec::new(),
            applied: vec![Vec::new(); problem.n_operator_terms()],
            gram_basis: Vec::new(),
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: String,
        mesh: Mesh,
        variant: AlphaVariant,
        parameter_box: Vec<(f64, f64)>,
        coefficients: ParametricCoefficients,
        operator_thetas: Vec<ThetaFn>,
        load_thetas: Vec<ThetaFn>,
        basis: Vec<Vec<f64>>,
        reduced_operators: Vec<DenseOperator>,
        reduced_loads: Vec<Vec<f64>>,
        residual: ResidualFactor,
        selected: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            name,
            mesh,
            variant,
            parameter_box,
            coefficients,
            operator_thetas,
            load_thetas,
            basis,
            reduced_operators,
            reduced_loads,
            residual,
            selected,
            applied: Vec::new(),
            gram_basis: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn s(&self) -> f64 {
        self.coefficients.s
    }

    /// Orthonormalises `snapshot` against the basis (modified Gram-Schmidt in
    /// the G-inner product, two passes) and extends every reduced quantity.
    pub fn add_snapshot(&mut self, problem: &AffineProblem, snapshot: &[f64], mu: &[f64]) -> Result<()> {
        if self.applied.len() != problem.n_operator_terms() || snapshot.len() != problem.n_dofs() {
            return Err(Error::Size("snapshot does not match the model".into()));
        }
        let original = problem.v_norm(snapshot);
        if !(original > 0.0) {
            return Err(Error::Stagnation(0.0));
        }
        let mut w = snapshot.to_vec();
        for _ in 0..2 {
            for (xi, gxi) in self.basis.iter().zip(&self.gram_basis) {
                let c = dot(gxi, &w);
                for (wi, x) in w.iter_mut().zip(xi) {
                    *wi -= c * x;
                }
            }
        }
        let rest = problem.v_norm(&w);
        if rest < STAGNATION_TOL * original {
            return Err(Error::Stagnation(rest / original));
        }
        w.iter_mut().for_each(|v| *v /= rest);
        let n = self.size();
        for (q, term) in problem.operator_terms().enumerate() {
            let aw = term.discrete.matvec(&w);
            let old = &self.reduced_operators[q];
            let mut grown = DenseOperator::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    grown.set(i, j, old.get(i, j));
                }
                grown.set(i, n, dot(&self.basis[i], &aw));
                grown.set(n, i, dot(&w, &self.applied[q][i]));
            }
            grown.set(n, n, dot(&w, &aw));
            self.reduced_operators[q] = grown;
            self.applied[q].push(aw);
        }
        for (fq, term) in self.reduced_loads.iter_mut().zip(&problem.load) {
            fq.push(dot(&w, &term.discrete));
        }
        for q in 0..problem.n_operator_terms() {
            let rep = problem.riesz(&self.applied[q][n]);
            self.residual.push(rep, &problem.gram);
        }
        self.gram_basis.push(problem.gram.matvec(&w));
        self.basis.push(w);
        self.selected.push(mu.to_vec());
        Ok(())
    }

    /// Coefficients of the residual in terms of the stored representers.
    fn residual_weights(&self, mu: &[f64], coefficients: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = self.load_thetas.iter().map(|t| t.eval(mu)).collect();
        for &c in coefficients {
            for t in &self.operator_thetas {
                v.push(-t.eval(mu) * c);
            }
        }
        v
    }

    pub fn check_parameter(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.parameter_box.len() {
            return Err(Error::Size(format!("expected {} parameters, got {}", self.parameter_box.len(), mu.len())));
        }
        for (k, (&m, &(lo, hi))) in mu.iter().zip(&self.parameter_box).enumerate() {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if !(m >= lo - slack && m <= hi + slack) {
                return Err(Error::Domain(format!("mu_{} = {m} outside [{lo}, {hi}]", k + 1)));
            }
        }
        Ok(())
    }

    /// Solves the `n × n` Galerkin system; a singular matrix means `μ` lies
    /// outside the region where coercivity holds.
    pub fn reduced_coefficients(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_parameter(mu)?;
        let n = self.size();
        let mut a = vec![0.0; n * n];
        for (t, op) in self.operator_thetas.iter().zip(&self.reduced_operators) {
            let theta = t.eval(mu);
            if theta != 0.0 {
                for (x, y) in a.iter_mut().zip(op.as_slice()) {
                    *x += theta * y;
                }
            }
        }
        let mut b = vec![0.0; n];
        for (t, fq) in self.load_thetas.iter().zip(&self.reduced_loads) {
            let theta = t.eval(mu);
            for (x, y) in b.iter_mut().zip(fq) {
                *x += theta * y;
            }
        }
        solve_small(a, b)
    }

    /// `‖ϱ_n(μ)‖_{V'}` through the triangular factor; accurate down to
    /// rounding in the residual itself.
    pub fn residual_norm(&self, mu: &[f64], coefficients: &[f64]) -> f64 {
        self.residual.norm(&self.residual_weights(mu, coefficients))
    }

    pub fn alpha(&self, mu: &[f64]) -> Result<f64> {
        self.coefficients.alpha(mu, self.variant)
    }

    pub fn estimate(&self, mu: &[f64]) -> Result<OnlineEstimate> {
        let alpha = self.alpha(mu)?;
        self.estimate_with_alpha(mu, alpha)
    }

    pub fn estimate_with_alpha(&self, mu: &[f64], alpha: f64) -> Result<OnlineEstimate> {
        let coefficients = self.reduced_coefficients(mu)?;
        let residual_norm = self.residual_norm(mu, &coefficients);
        Ok(OnlineEstimate { delta: residual_norm / alpha, coefficients, residual_norm, alpha })
    }

    /// `Σ c_i ξ_i` as hat-function coefficients.
    pub fn lift_coefficients(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.n_dofs()];
        for (c, xi) in coefficients.iter().zip(&self.basis) {
            for (ui, x) in u.iter_mut().zip(xi) {
                *ui += c * x;
            }
        }
        u
    }

    pub fn lift(&self, coefficients: &[f64]) -> Result<PiecewiseLinearFn> {
        PiecewiseLinearFn::new(self.mesh, self.lift_coefficients(coefficients))
    }

    /// Largest entry of `|ΞᵀGΞ − I|`.
    pub fn orthonormality_defect(&self, problem: &AffineProblem) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, xi) in self.basis.iter().enumerate() {
            let g = problem.gram.matvec(xi);
            for (j, xj) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&g, xj) - target).abs());
            }
        }
        worst
    }
}

pub fn rb_solve(model: &ReducedModel, mu: &[f64]) -> Result<RbSolution> {
    let est = model.estimate(mu)?;
    Ok(RbSolution {
        u_n: model.lift(&est.coefficients)?,
        coefficients: est.coefficients,
        delta: est.delta,
        residual_norm: est.residual_norm,
        alpha: est.alpha,
    })
}

/// `‖ϱ_n(μ)‖_{V'}` from the Gram blocks `ff`, `fa`, `aa`.
///
/// Tiny negative values from cancellation are clamped to zero; values below
/// `-1e-8·scale` mean the blocks are corrupt.
pub fn residual_dual_norm(model: &ReducedModel, mu: &[f64], coefficients: &[f64]) -> Result<f64> {
    if coefficients.len() != model.size() {
        return Err(Error::Size(format!("expected {} coefficients, got {}", model.size(), coefficients.len())));
    }
    let v = model.residual_weights(mu, coefficients);
    let blocks = model.residual.gram_blocks();
    let value = blocks.bilinear(&v, &v);
    let scale = v
        .iter()
        .enumerate()
        .map(|(k, vk)| vk.abs() * blocks.get(k, k).max(0.0).sqrt())
        .sum::<f64>()
        .powi(2);
    clamp_squared_norm(value, scale)
}

/// Square root of a quadratic form that should be nonnegative.
///
/// Between `-1e-8·scale` and `-1e-12·scale` the value is still clamped, since
/// cancellation in a squared norm can reach that far.
pub fn clamp_squared_norm(value: f64, scale: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value >= -1e-8 * scale {
        Ok(0.0)
    } else {
        Err(Error::NegativeResidual(value))
    }
}

/// Direct evaluation: assemble `f(μ) − A(μ) u`, solve `G r̂ = r`, return `sqrt(rᵀ r̂)`.
pub fn direct_residual_norm(problem: &AffineProblem, mu: &[f64], u: &[f64]) -> Result<f64> {
    let au = problem.operator(mu)?.matvec(u);
    let r: Vec<f64> = problem.load_vector(mu)?.iter().zip(&au).map(|(f, a)| f - a).collect();
    Ok(problem.dual_norm(&r))
}

/// `‖u^N(μ) − u_n(μ)‖_V` with the truth solution computed (or fetched) on demand.
pub fn true_error(problem: &AffineProblem, model: &ReducedModel, mu: &[f64], coefficients: &[f64]) -> Result<f64> {
    let truth = problem.truth_solve(mu)?;
    let u_n = model.lift_coefficients(coefficients);
    let e: Vec<f64> = truth.coeffs().iter().zip(&u_n).map(|(a, b)| a - b).collect();
    Ok(problem.v_norm(&e))
}

#[cfg(test)]
mod tests {
    use super::super::affine::{build_affine_problem, AffineKind};
    use super::*;
    use rand::{Rng, SeedableRng};

    fn case_one(s: f64, n: usize) -> AffineProblem {
        build_affine_problem(AffineKind::GreedyCase1, s, n, AlphaVariant::Alpha).unwrap()
    }

    fn with_snapshots(problem: &AffineProblem, mus: &[Vec<f64>]) -> ReducedModel {
        let mut model = ReducedModel::empty(problem).unwrap();
        for mu in mus {
            let u = problem.truth_solve(mu).unwrap();
            model.add_snapshot(problem, u.coeffs(), mu).unwrap();
        }
        model
    }

    fn sample(problem: &AffineProblem, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| problem.parameter_box.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
            .collect()
    }

    #[test]
    fn empty_model_residual_is_the_load() {
        let p = case_one(1.5, 32);
        let model = ReducedModel::empty(&p).unwrap();
        let mu = [1.0, 0.8, 1.2, 0.5, 0.5];
        let est = model.estimate(&mu).unwrap();
        assert!(est.coefficients.is_empty());
        let direct = p.dual_norm(&p.load_vector(&mu).unwrap());
        assert!((est.residual_norm - direct).abs() < 1e-12 * direct);
        assert!((residual_dual_norm(&model, &mu, &[]).unwrap() - direct).abs() < 1e-10 * direct);
        assert!((est.delta - direct / p.alpha(&mu, AlphaVariant::Alpha).unwrap()).abs() < 1e-12 * est.delta);
    }

    #[test]
    fn basis_stays_orthonormal() {
        let p = case_one(1.2, 64);
        let model = with_snapshots(&p, &sample(&p, 8, 1));
        assert!(model.orthonormality_defect(&p) < 1e-10);
        assert_eq!(model.size(), 8);
    }

    #[test]
    fn repeated_snapshot_stagnates() {
        let p = case_one(1.5, 32);
        let mu = vec![1.0, 1.1, 0.9, 0.2, 0.4];
        let mut model = with_snapshots(&p, std::slice::from_ref(&mu));
        let u = p.truth_solve(&mu).unwrap();
        assert!(matches!(model.add_snapshot(&p, u.coeffs(), &mu), Err(Error::Stagnation(_))));
        assert_eq!(model.size(), 1);
    }

    #[test]
    fn reduced_operators_match_projection() {
        let p = case_one(1.8, 32);
        let model = with_snapshots(&p, &sample(&p, 3, 2));
        let mu = [0.8, 1.2, 1.0, 0.3, 0.9];
        let a = p.operator(&mu).unwrap();
        let n = model.size();
        let mut reduced = DenseOperator::zeros(n, n);
        for (t, op) in model.operator_thetas.iter().zip(&model.reduced_operators) {
            reduced.add_scaled(t.eval(&mu), op).unwrap();
        }
        for i in 0..n {
            for j in 0..n {
                let direct = dot(&model.basis[i], &a.matvec(&model.basis[j]));
                assert!((reduced.get(i, j) - direct).abs() < 1e-12 * a.max_abs());
            }
        }
    }

    #[test]
    fn snapshot_parameters_are_reproduced() {
        let p = case_one(1.5, 64);
        let mus = sample(&p, 4, 3);
        let model = with_snapshots(&p, &mus);
        for mu in &mus {
            let sol = rb_solve(&model, mu).unwrap();
            assert!(true_error(&p, &model, mu, &sol.coefficients).unwrap() <= 1e-8);
            assert!(sol.delta <= 1e-6, "{}", sol.delta);
        }
    }

    #[test]
    fn estimator_agrees_with_direct_riesz_solve() {
        let p = case_one(1.2, 64);
        let model = with_snapshots(&p, &sample(&p, 5, 4));
        for mu in sample(&p, 6, 5) {
            let sol = rb_solve(&model, &mu).unwrap();
            let direct = direct_residual_norm(&p, &mu, sol.u_n.coeffs()).unwrap();
            assert!((sol.residual_norm - direct).abs() <= 1e-6 * direct, "{} {direct}", sol.residual_norm);
            let blocks = residual_dual_norm(&model, &mu, &sol.coefficients).unwrap();
            assert!((blocks - direct).abs() <= 1e-6 * direct, "{blocks} {direct}");
        }
    }

    #[test]
    fn bound_dominates_true_error() {
        let p = case_one(1.2, 64);
        let train = sample(&p, 6, 6);
        let mut model = ReducedModel::empty(&p).unwrap();
        for mu in &train {
            for test in sample(&p, 10, 7) {
                let est = model.estimate(&test).unwrap();
                assert!(true_error(&p, &model, &test, &est.coefficients).unwrap() <= est.delta + 1e-8);
            }
            model.add_snapshot(&p, p.truth_solve(mu).unwrap().coeffs(), mu).unwrap();
        }
    }

    #[test]
    fn zero_load_gives_zero_residual() {
        let mut spec = super::super::affine::AffineSpec::preset(AffineKind::ConstantDiffusion { mu_plus: 1.0 }).unwrap();
        spec.load[0].1 = crate::coefficient::Coefficient::Constant(0.0);
        let p = AffineProblem::new(&spec, crate::fractional::FracOrder::new(1.5).unwrap(), Mesh::new(16).unwrap(), AlphaVariant::Alpha)
            .unwrap();
        let model = ReducedModel::empty(&p).unwrap();
        assert_eq!(residual_dual_norm(&model, &[0.5], &[]).unwrap(), 0.0);
        assert_eq!(model.estimate(&[0.5]).unwrap().delta, 0.0);
    }

    #[test]
    fn negative_forms_are_clamped_or_rejected() {
        assert_eq!(clamp_squared_norm(4.0, 1.0).unwrap(), 2.0);
        assert_eq!(clamp_squared_norm(-1e-13, 1.0).unwrap(), 0.0);
        assert_eq!(clamp_squared_norm(-1e-9, 1.0).unwrap(), 0.0);
        assert!(matches!(clamp_squared_norm(-1e-6, 1.0), Err(Error::NegativeResidual(_))));
    }
}
