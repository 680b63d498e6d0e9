//! Affinely parametrised problems, training grids and the cached truth solver.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::assembly::{assemble_diffusion_component, assemble_load, assemble_reaction, assemble_seminorm_gram};
use crate::coefficient::{bubble, indicator, Coefficient};
use crate::constants::{coefficient_stats, constant_set, AlphaVariant};
use crate::dense::{solve_dense, CholeskyFactor, DenseOperator};
use crate::error::{Error, Result};
use crate::fractional::FracOrder;
use crate::mesh::{Mesh, PiecewiseLinearFn};
use crate::problem::{FemProblem, FemSystem};
use crate::quadrature::GaussRule;

/// Default cap on the size of a tensor training grid.
pub const TRAINING_CAP: usize = 1_000_000;

/// Parameter dependence of one affine term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaFn {
    Constant(f64),
    /// `μ_k`, zero-based.
    Param(usize),
}

impl ThetaFn {
    pub fn eval(self, mu: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => c,
            Self::Param(k) => mu[k],
        }
    }

    pub fn label(self) -> String {
        match self {
            Self::Constant(c) => format!("{c}"),
            Self::Param(k) => format!("mu_{}", k + 1),
        }
    }
}

/// One term `θ(μ) c(x)` with its assembled discrete counterpart.
#[derive(Debug, Clone)]
pub struct AffineTerm<T> {
    pub theta: ThetaFn,
    pub coefficient: Coefficient,
    pub discrete: T,
}

/// Named parametric problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AffineKind {
    /// Four quarter-wise diffusion values `1, μ₁, μ₂, μ₃` and reaction `μ₄ + μ₅ x`.
    GreedyCase1,
    /// `-D^s u + μ u = f` with `μ ∈ [0, μ⁺]`.
    ConstantDiffusion { mu_plus: f64 },
}

impl AffineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GreedyCase1 => "greedy-case-1",
            Self::ConstantDiffusion { .. } => "constant-diffusion",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "greedy-case-1" => Ok(Self::GreedyCase1),
            "constant-diffusion" | "constant-diffusion-reaction" => Ok(Self::ConstantDiffusion { mu_plus: 1.0 }),
            other => Err(Error::Config(format!("unknown parametric problem '{other}'"))),
        }
    }
}

/// Components of a custom parametric problem before assembly.
#[derive(Debug, Clone, Default)]
pub struct AffineSpec {
    pub name: String,
    pub diffusion: Vec<(ThetaFn, Coefficient)>,
    pub reaction: Vec<(ThetaFn, Coefficient)>,
    pub load: Vec<(ThetaFn, Coefficient)>,
    pub parameter_box: Vec<(f64, f64)>,
}

impl AffineSpec {
    pub fn preset(kind: AffineKind) -> Result<Self> {
        let bubble = bubble();
        Ok(match kind {
            AffineKind::GreedyCase1 => {
                let thetas = [ThetaFn::Constant(1.0), ThetaFn::Param(0), ThetaFn::Param(1), ThetaFn::Param(2)];
                let diffusion = thetas
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| Ok((t, indicator(0.25 * k as f64, 0.25 * (k + 1) as f64)?)))
                    .collect::<Result<Vec<_>>>()?;
                Self {
                    name: kind.name().into(),
                    diffusion,
                    reaction: vec![
                        (ThetaFn::Param(3), Coefficient::Constant(1.0)),
                        (ThetaFn::Param(4), Coefficient::affine(0.0, 1.0)),
                    ],
                    load: vec![(ThetaFn::Constant(1.0), bubble)],
                    parameter_box: vec![(0.7, 1.3), (0.7, 1.3), (0.7, 1.3), (0.0, 1.0), (0.0, 1.0)],
                }
            }
            AffineKind::ConstantDiffusion { mu_plus } => {
                if !(mu_plus > 0.0) {
                    return Err(Error::Config(format!("reaction bound must be positive, got {mu_plus}")));
                }
                Self {
                    name: kind.name().into(),
                    diffusion: vec![(ThetaFn::Constant(1.0), Coefficient::Constant(1.0))],
                    reaction: vec![(ThetaFn::Param(0), Coefficient::Constant(1.0))],
                    load: vec![(ThetaFn::Constant(1.0), bubble)],
                    parameter_box: vec![(0.0, mu_plus)],
                }
            }
        })
    }
}

/// Diffusion and reaction coefficient terms, enough to evaluate `α(μ)` without
/// the assembled operators.
#[derive(Debug, Clone)]
pub struct ParametricCoefficients {
    pub s: f64,
    pub diffusion: Vec<(ThetaFn, Coefficient)>,
    pub reaction: Vec<(ThetaFn, Coefficient)>,
}

fn combine(terms: &[(ThetaFn, Coefficient)], mu: &[f64]) -> Coefficient {
    if terms.is_empty() {
        return Coefficient::Constant(0.0);
    }
    let parts: Vec<(f64, &Coefficient)> = terms.iter().map(|(t, c)| (t.eval(mu), c)).collect();
    Coefficient::linear_combination(&parts)
}

impl ParametricCoefficients {
    pub fn diffusion_at(&self, mu: &[f64]) -> Coefficient {
        combine(&self.diffusion, mu)
    }

    pub fn reaction_at(&self, mu: &[f64]) -> Coefficient {
        combine(&self.reaction, mu)
    }

    /// Coercivity lower bound from the ranges of `d(·;μ)` and `r(·;μ)`.
    pub fn alpha(&self, mu: &[f64], variant: AlphaVariant) -> Result<f64> {
        parametric_alpha(self.s, &self.diffusion_at(mu), &self.reaction_at(mu), variant)
    }
}

/// `α(μ)` of the requested variant; fails unless it is positive.
pub fn parametric_alpha(s: f64, d: &Coefficient, r: &Coefficient, variant: AlphaVariant) -> Result<f64> {
    let value = constant_set(s, &coefficient_stats(d), &coefficient_stats(r))?.alpha(variant);
    if !(value > 0.0) {
        return Err(Error::Domain(format!("coercivity bound {} is {value}; the estimator is not certified", variant.name())));
    }
    Ok(value)
}

type Key = Vec<u64>;

/// `Σ θ_q^d(μ) A₁_q + Σ θ_q^r(μ) A₂_q` with load `Σ θ_q^f(μ) f_q` on a fixed mesh.
pub struct AffineProblem {
    pub name: String,
    pub order: FracOrder,
    pub mesh: Mesh,
    pub diffusion: Vec<AffineTerm<DenseOperator>>,
    pub reaction: Vec<AffineTerm<DenseOperator>>,
    pub load: Vec<AffineTerm<Vec<f64>>>,
    pub parameter_box: Vec<(f64, f64)>,
    pub variant: AlphaVariant,
    /// V-inner product: the semi-norm Gram matrix.
    pub gram: DenseOperator,
    gram_factor: CholeskyFactor,
    cache: Mutex<HashMap<Key, Arc<PiecewiseLinearFn>>>,
}

impl std::fmt::Debug for AffineProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AffineProblem")
            .field("name", &self.name)
            .field("s", &self.order.s())
            .field("n_elements", &self.mesh.n_elements())
            .field("q_diffusion", &self.diffusion.len())
            .field("q_reaction", &self.reaction.len())
            .field("q_load", &self.load.len())
            .finish()
    }
}

pub fn build_affine_problem(kind: AffineKind, s: f64, n_elements: usize, variant: AlphaVariant) -> Result<AffineProblem> {
    AffineProblem::new(&AffineSpec::preset(kind)?, FracOrder::new(s)?, Mesh::new(n_elements)?, variant)
}

fn check_thetas(what: &str, terms: &[(ThetaFn, Coefficient)], p: usize) -> Result<()> {
    for (theta, _) in terms {
        match *theta {
            ThetaFn::Param(k) if k >= p => {
                return Err(Error::Config(format!(
                    "{what} component uses mu_{} but the box has {p} dimensions",
                    k + 1
                )))
            }
            ThetaFn::Constant(c) if !c.is_finite() => {
                return Err(Error::Config(format!("{what} component has a non-finite weight")))
            }
            _ => {}
        }
    }
    Ok(())
}

impl AffineProblem {
    pub fn new(spec: &AffineSpec, order: FracOrder, mesh: Mesh, variant: AlphaVariant) -> Result<Self> {
        if spec.diffusion.is_empty() {
            return Err(Error::Config("at least one diffusion component is required".into()));
        }
        if spec.load.is_empty() {
            return Err(Error::Config("at least one load component is required".into()));
        }
        for &(lo, hi) in &spec.parameter_box {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("invalid parameter interval [{lo}, {hi}]")));
            }
        }
        let p = spec.parameter_box.len();
        check_thetas("diffusion", &spec.diffusion, p)?;
        check_thetas("reaction", &spec.reaction, p)?;
        check_thetas("load", &spec.load, p)?;

        let beta = order.beta();
        let diffusion = spec
            .diffusion
            .iter()
            .map(|(theta, c)| {
                Ok(AffineTerm { theta: *theta, coefficient: c.clone(), discrete: assemble_diffusion_component(&mesh, beta, c)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let reaction = spec
            .reaction
            .iter()
            .map(|(theta, c)| Ok(AffineTerm { theta: *theta, coefficient: c.clone(), discrete: assemble_reaction(&mesh, c)? }))
            .collect::<Result<Vec<_>>>()?;
        let load = spec
            .load
            .iter()
            .map(|(theta, c)| Ok(AffineTerm { theta: *theta, coefficient: c.clone(), discrete: assemble_load(&mesh, c)? }))
            .collect::<Result<Vec<_>>>()?;
        let gram = assemble_seminorm_gram(&mesh, beta)?;
        let gram_factor = CholeskyFactor::new(&gram, "semi-norm Gram")?;
        Ok(Self {
            name: spec.name.clone(),
            order,
            mesh,
            diffusion,
            reaction,
            load,
            parameter_box: spec.parameter_box.clone(),
            variant,
            gram,
            gram_factor,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn n_params(&self) -> usize {
        self.parameter_box.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// `Q^d + Q^r`
    pub fn n_operator_terms(&self) -> usize {
        self.diffusion.len() + self.reaction.len()
    }

    /// Diffusion terms followed by reaction terms.
    pub fn operator_terms(&self) -> impl Iterator<Item = &AffineTerm<DenseOperator>> {
        self.diffusion.iter().chain(&self.reaction)
    }

    pub fn check_parameter(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n_params() {
            return Err(Error::Size(format!("expected {} parameters, got {}", self.n_params(), mu.len())));
        }
        for (k, (&m, &(lo, hi))) in mu.iter().zip(&self.parameter_box).enumerate() {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if !(m >= lo - slack && m <= hi + slack) {
                return Err(Error::Domain(format!("mu_{} = {m} outside [{lo}, {hi}]", k + 1)));
            }
        }
        Ok(())
    }

    pub fn operator(&self, mu: &[f64]) -> Result<DenseOperator> {
        self.check_parameter(mu)?;
        let n = self.n_dofs();
        let mut a = DenseOperator::zeros(n, n);
        for term in self.operator_terms() {
            let theta = term.theta.eval(mu);
            if theta != 0.0 {
                a.add_scaled(theta, &term.discrete)?;
            }
        }
        Ok(a)
    }

    pub fn load_vector(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_parameter(mu)?;
        let mut f = vec![0.0; self.n_dofs()];
        for term in &self.load {
            let theta = term.theta.eval(mu);
            for (fi, v) in f.iter_mut().zip(&term.discrete) {
                *fi += theta * v;
            }
        }
        Ok(f)
    }

    pub fn coefficients(&self) -> ParametricCoefficients {
        let pairs = |terms: &[AffineTerm<DenseOperator>]| terms.iter().map(|t| (t.theta, t.coefficient.clone())).collect();
        ParametricCoefficients { s: self.order.s(), diffusion: pairs(&self.diffusion), reaction: pairs(&self.reaction) }
    }

    pub fn diffusion_at(&self, mu: &[f64]) -> Coefficient {
        self.coefficients().diffusion_at(mu)
    }

    pub fn reaction_at(&self, mu: &[f64]) -> Coefficient {
        self.coefficients().reaction_at(mu)
    }

    pub fn load_at(&self, mu: &[f64]) -> Coefficient {
        let pairs: Vec<(ThetaFn, Coefficient)> = self.load.iter().map(|t| (t.theta, t.coefficient.clone())).collect();
        combine(&pairs, mu)
    }

    /// Direct assembly from the combined coefficients, bypassing the affine terms.
    pub fn direct_system(&self, mu: &[f64]) -> Result<FemSystem> {
        self.check_parameter(mu)?;
        FemProblem {
            order: self.order,
            diffusion: self.diffusion_at(mu),
            reaction: self.reaction_at(mu),
            load: self.load_at(mu),
        }
        .assemble(&self.mesh)
    }

    /// `max |Σθ_q A_q − A_direct| / max |A_direct|`
    pub fn affine_consistency(&self, mu: &[f64]) -> Result<f64> {
        let affine = self.operator(mu)?;
        let direct = self.direct_system(mu)?.stiffness;
        let diff = affine
            .as_slice()
            .iter()
            .zip(direct.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(diff / direct.max_abs())
    }

    pub fn alpha(&self, mu: &[f64], variant: AlphaVariant) -> Result<f64> {
        self.check_parameter(mu)?;
        self.coefficients().alpha(mu, variant)
    }

    /// Riesz representer `G⁻¹ r` of a functional given by its hat-function moments.
    pub fn riesz(&self, functional: &[f64]) -> Vec<f64> {
        self.gram_factor.solve(functional)
    }

    pub fn riesz_columns(&self, columns: &faer::Mat<f64>) -> faer::Mat<f64> {
        self.gram_factor.solve_columns(columns)
    }

    /// `‖ℓ‖_{V'} = sqrt(ℓᵀ G⁻¹ ℓ)`
    pub fn dual_norm(&self, functional: &[f64]) -> f64 {
        let r = self.riesz(functional);
        crate::dense::dot(&r, functional).max(0.0).sqrt()
    }

    /// `|v|_β = sqrt(vᵀ G v)`
    pub fn v_norm(&self, v: &[f64]) -> f64 {
        self.gram.quadratic_form(v).max(0.0).sqrt()
    }

    pub fn truth_solve(&self, mu: &[f64]) -> Result<Arc<PiecewiseLinearFn>> {
        let key: Key = mu.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.cache.lock().expect("truth cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let u = solve_dense(&self.operator(mu)?, &self.load_vector(mu)?)?;
        let u = Arc::new(PiecewiseLinearFn::new(self.mesh, u)?);
        self.cache.lock().expect("truth cache poisoned").entry(key).or_insert_with(|| Arc::clone(&u));
        Ok(u)
    }

    pub fn cached_solves(&self) -> usize {
        self.cache.lock().expect("truth cache poisoned").len()
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("truth cache poisoned").clear();
    }
}

/// Parameter vectors used for greedy training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub points: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(points: Vec<Vec<f64>>, parameter_box: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Size("training set is empty".into()));
        }
        for mu in &points {
            if mu.len() != parameter_box.len()
                || mu.iter().zip(parameter_box).any(|(&m, &(lo, hi))| !(m >= lo && m <= hi))
            {
                return Err(Error::Domain(format!("training point {mu:?} outside the parameter box")));
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn gauss_legendre_grid(parameter_box: &[(f64, f64)], points_per_dim: usize) -> Result<TrainingSet> {
    gauss_legendre_grid_capped(parameter_box, points_per_dim, TRAINING_CAP)
}

/// Tensor grid of mapped Gauss-Legendre nodes, last coordinate fastest.
pub fn gauss_legendre_grid_capped(parameter_box: &[(f64, f64)], points_per_dim: usize, cap: usize) -> Result<TrainingSet> {
    if points_per_dim == 0 {
        return Err(Error::Size("need at least one point per dimension".into()));
    }
    let total = u32::try_from(parameter_box.len())
        .ok()
        .and_then(|p| points_per_dim.checked_pow(p))
        .filter(|&t| t <= cap)
        .ok_or_else(|| {
            Error::Size(format!(
                "{points_per_dim}^{} training points exceed the cap {cap}",
                parameter_box.len()
            ))
        })?;
    let rule = GaussRule::legendre(points_per_dim)?;
    let axes: Vec<Vec<f64>> = parameter_box
        .iter()
        .map(|&(lo, hi)| rule.nodes().iter().map(|t| lo + (hi - lo) * t).collect())
        .collect();
    let p = parameter_box.len();
    let points = (0..total)
        .map(|mut idx| {
            let mut mu = vec![0.0; p];
            for k in (0..p).rev() {
                mu[k] = axes[k][idx % points_per_dim];
                idx /= points_per_dim;
            }
            mu
        })
        .collect();
    TrainingSet::new(points, parameter_box)
}
