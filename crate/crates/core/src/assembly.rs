//! Assembly of the dense nonlocal stiffness matrix, mass and reaction
//! matrices, load vectors and the fractional semi-norm Gram matrix.
//!
//! Convention: `A[i][j] = a(φ_j, φ_i)` so that `A u = f` with `f_i = (f, φ_i)`.
//!
//! On element `m`, writing `x = x_m + h t` and `a = 1 - β`,
//!
//! ```text
//! D^β φ_j(x)  = c h^{a-1} λ_{m-j}(t),      D̄^β φ_i(x) = c h^{a-1} λ_{i-m-1}(1-t),
//! λ_p(t)      = (t+p+1)_+^a - 2 (t+p)_+^a + (t+p-1)_+^a,      c = 1/Γ(2-β),
//! ```
//!
//! hence `a₁(φ_j, φ_i) = -c² h^{2a-1} Σ_{m=j-1}^{i} ∫_0^1 d(x_m + h t) λ_{m-j}(t) λ_{i-m-1}(1-t) dt`
//! and the matrix is lower Hessenberg. Only `λ_{-1}, λ_0, λ_1` carry the
//! non-smooth `t^a`; it is split off and integrated with Gauss-Jacobi rules,
//! the remainder is analytic on [0, 1] and Gauss-Legendre converges
//! geometrically.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};

use crate::coefficient::Coefficient;
use crate::dense::{CholeskyFactor, DenseOperator};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::GaussRule;
use crate::special::{beta_fn, recip_gamma};

/// Gauss-Legendre points per element for all assembly integrals.
pub const POINTS_PER_ELEMENT: usize = 10;

/// Elements per GEMM block in the general-coefficient path.
const BLOCK_ELEMENTS: usize = 64;

/// Coefficient of `t^a` in `λ_p(t)`.
pub(crate) fn kappa(p: i64) -> f64 {
    match p {
        -1 | 1 => 1.0,
        0 => -2.0,
        _ => 0.0,
    }
}

/// Evaluates `λ_p(t) - κ_p t^a` for `t ∈ [0, 1]`.
pub(crate) struct SmoothLambda {
    a: f64,
    /// `2 C(a, 2k)` for the far-field expansion.
    series: Vec<f64>,
}

impl SmoothLambda {
    pub(crate) fn new(a: f64) -> Self {
        let mut binom = 1.0;
        let mut series = Vec::new();
        for n in 1..=24 {
            binom *= (a - (n - 1) as f64) / n as f64;
            if n % 2 == 0 {
                series.push(2.0 * binom);
            }
        }
        Self { a, series }
    }

    pub(crate) fn eval(&self, p: i64, t: f64) -> f64 {
        let a = self.a;
        match p {
            i64::MIN..=-1 => 0.0,
            0 => (t + 1.0).powf(a),
            1 => (t + 2.0).powf(a) - 2.0 * (t + 1.0).powf(a),
            _ => {
                let x = t + p as f64;
                if x >= 8.0 {
                    // (x+1)^a - 2x^a + (x-1)^a = x^a Σ 2 C(a,2k) x^{-2k}
                    let inv2 = 1.0 / (x * x);
                    let mut acc = 0.0;
                    for c in self.series.iter().rev() {
                        acc = acc * inv2 + c;
                    }
                    x.powf(a) * acc * inv2
                } else {
                    (x + 1.0).powf(a) - 2.0 * x.powf(a) + (x - 1.0).powf(a)
                }
            }
        }
    }
}

/// Quadrature data shared by both assembly paths.
struct Kernel {
    a: f64,
    /// `-c² h^{2a-1}`.
    prefactor: f64,
    legendre: GaussRule,
    /// Gauss-Jacobi rule for the weight `t^a`.
    jacobi_left: GaussRule,
    /// Gauss-Jacobi rule for `t^a (1-t)^a`.
    jacobi_both: GaussRule,
    /// `λ^sm_p(t_g)` at Legendre nodes, `p = 0..n_elements`.
    at_nodes: Vec<Vec<f64>>,
    /// `λ^sm_q(1 - t_g)` at Legendre nodes.
    at_mirrored: Vec<Vec<f64>>,
    /// `λ^sm_q(1 - τ_g)` at the left-weighted Jacobi nodes.
    at_jacobi: Vec<Vec<f64>>,
    /// `∫_0^1 t^a λ^sm_q(1-t) dt`.
    moments: Vec<f64>,
}

impl Kernel {
    fn new(mesh: &Mesh, beta: f64) -> Result<Self> {
        if !(beta > 0.5 && beta < 1.0) {
            return Err(Error::Domain(format!("β must lie in (1/2, 1), got {beta}")));
        }
        let a = 1.0 - beta;
        let c = recip_gamma(2.0 - beta);
        let h = mesh.h();
        let n = mesh.n_elements();
        let legendre = GaussRule::legendre(POINTS_PER_ELEMENT)?;
        let jacobi_left = GaussRule::jacobi(POINTS_PER_ELEMENT, a, 0.0)?;
        let jacobi_both = GaussRule::jacobi(POINTS_PER_ELEMENT, a, a)?;
        let lam = SmoothLambda::new(a);
        let table = |points: &[f64], mirror: bool| -> Vec<Vec<f64>> {
            (0..=n as i64)
                .map(|p| {
                    points
                        .iter()
                        .map(|&t| lam.eval(p, if mirror { 1.0 - t } else { t }))
                        .collect()
                })
                .collect()
        };
        let at_nodes = table(legendre.nodes(), false);
        let at_mirrored = table(legendre.nodes(), true);
        let at_jacobi = table(jacobi_left.nodes(), true);
        let moments = at_jacobi
            .iter()
            .map(|row| jacobi_left.weights().iter().zip(row).map(|(w, v)| w * v).sum())
            .collect();
        Ok(Self {
            a,
            prefactor: -c * c * h.powf(2.0 * a - 1.0),
            legendre,
            jacobi_left,
            jacobi_both,
            at_nodes,
            at_mirrored,
            at_jacobi,
            moments,
        })
    }

    /// `∫_0^1 t^a λ^sm_q(1-t) dt`.
    fn left_singular_moment(&self, q: i64) -> f64 {
        if q < 0 {
            0.0
        } else {
            self.moments[q as usize]
        }
    }

    /// `J(p, q) = ∫_0^1 λ_p(t) λ_q(1-t) dt` for a unit coefficient.
    fn unit_integral(&self, p: i64, q: i64, beta_aa: f64) -> f64 {
        if p < -1 || q < -1 {
            return 0.0;
        }
        let (kp, kq) = (kappa(p), kappa(q));
        let mut acc = 0.0;
        if kp != 0.0 || kq != 0.0 {
            acc += kp * kq * beta_aa;
            acc += kp * self.left_singular_moment(q);
            acc += kq * self.left_singular_moment(p);
        }
        if p >= 0 && q >= 0 {
            let (lp, lq) = (&self.at_nodes[p as usize], &self.at_mirrored[q as usize]);
            acc += self
                .legendre
                .weights()
                .iter()
                .zip(lp.iter().zip(lq))
                .map(|(w, (x, y))| w * x * y)
                .sum::<f64>();
        }
        acc
    }
}

/// Stiffness matrix of `a₁(u, v) = -(d D^β u, D̄^β v)` on the interior hats.
///
/// Piecewise-constant `d` whose jumps sit on mesh nodes is assembled from
/// per-element integrals of a unit coefficient in `O(N²)` per piece; any other
/// shape goes through blocked matrix products over element quadrature points.
/// Fails with [`Error::CoefficientSign`] if `d ≤ 0` at a quadrature node.
pub fn assemble_diffusion(mesh: &Mesh, beta: f64, d: &Coefficient) -> Result<DenseOperator> {
    assemble_diffusion_impl(mesh, beta, d, true)
}

/// Same as [`assemble_diffusion`] without the positivity requirement, for
/// affine components such as indicator functions.
pub fn assemble_diffusion_component(mesh: &Mesh, beta: f64, d: &Coefficient) -> Result<DenseOperator> {
    assemble_diffusion_impl(mesh, beta, d, false)
}

fn assemble_diffusion_impl(mesh: &Mesh, beta: f64, d: &Coefficient, positive: bool) -> Result<DenseOperator> {
    let kernel = Kernel::new(mesh, beta)?;
    for &b in d.breakpoints() {
        if !mesh.is_node(b) {
            return Err(Error::MisalignedCoefficient(b));
        }
    }
    match d.constant_pieces() {
        Some(pieces) => {
            if positive {
                if let Some(&(x, _, v)) = pieces.iter().find(|piece| !(piece.2 > 0.0)) {
                    return Err(Error::CoefficientSign { x, value: v });
                }
            }
            Ok(assemble_piecewise(mesh, &kernel, &pieces))
        }
        None => assemble_general(mesh, &kernel, d, positive),
    }
}

fn assemble_piecewise(mesh: &Mesh, kernel: &Kernel, pieces: &[(f64, f64, f64)]) -> DenseOperator {
    let n = mesh.n_elements();
    let dofs = n - 1;
    let beta_aa = beta_fn(kernel.a + 1.0, kernel.a + 1.0).expect("a + 1 > 0");
    // element ranges [m_lo, m_hi) of each piece
    let ranges: Vec<(i64, i64, f64)> = pieces
        .iter()
        .map(|&(lo, hi, v)| {
            let m_lo = (lo * n as f64).round() as i64;
            let m_hi = (hi * n as f64).round() as i64;
            (m_lo, m_hi, v)
        })
        .filter(|&(lo, hi, v)| hi > lo && v != 0.0)
        .collect();
    let mut out = DenseOperator::zeros(dofs, dofs);
    let mut prefix = Vec::with_capacity(n + 2);
    // k = I - J ranges over -1..=dofs-1; p = m - J over -1..=k, with q = k - 1 - p.
    for k in -1..dofs as i64 {
        prefix.clear();
        prefix.push(0.0);
        let mut acc = 0.0;
        for p in -1..=k {
            acc += kernel.unit_integral(p, k - 1 - p, beta_aa);
            prefix.push(acc);
        }
        // prefix[p + 1 + 1] - prefix[lo + 1] sums p in [lo, hi]
        let range_sum = |lo: i64, hi: i64| -> f64 {
            let lo = lo.max(-1);
            let hi = hi.min(k);
            if hi < lo {
                0.0
            } else {
                prefix[(hi + 2) as usize] - prefix[(lo + 1) as usize]
            }
        };
        let j_start = if k < 0 { 2 } else { 1 };
        for jn in j_start..n as i64 {
            let inode = jn + k;
            if inode >= n as i64 {
                break;
            }
            let mut v = 0.0;
            for &(m_lo, m_hi, value) in &ranges {
                v += value * range_sum(m_lo - jn, m_hi - 1 - jn);
            }
            out.set((inode - 1) as usize, (jn - 1) as usize, kernel.prefactor * v);
        }
    }
    out
}

fn assemble_general(mesh: &Mesh, kernel: &Kernel, d: &Coefficient, positive: bool) -> Result<DenseOperator> {
    let n = mesh.n_elements();
    let dofs = n - 1;
    let h = mesh.h();
    let g = POINTS_PER_ELEMENT;
    let sample = |m: usize, t: f64| -> Result<f64> {
        let x = mesh.node(m) + h * t;
        let v = d.eval(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x });
        }
        if positive && !(v > 0.0) {
            return Err(Error::CoefficientSign { x, value: v });
        }
        Ok(v)
    };
    let mut acc = Mat::<f64>::zeros(dofs, dofs);

    // Smooth part: A[I][J] += Σ_{m,g} w_g d_m(t_g) λ^sm_{I-m-1}(1-t_g) λ^sm_{m-J}(t_g),
    // nonzero for J <= m <= I - 1.
    let weights = kernel.legendre.weights();
    let nodes = kernel.legendre.nodes();
    let mut d_legendre = vec![0.0; n * g];
    for m in 0..n {
        for (k, &t) in nodes.iter().enumerate() {
            d_legendre[m * g + k] = sample(m, t)?;
        }
    }
    let mut m0 = 0;
    while m0 < n {
        let m1 = (m0 + BLOCK_ELEMENTS).min(n);
        let rows = (m1 - m0) * g;
        // test side: I in m0+1..n-1, trial side: J in 1..m1-1
        let n_test = n - 1 - m0;
        let n_trial = m1 - 1;
        if n_test > 0 && n_trial > 0 {
            let test = Mat::<f64>::from_fn(rows, n_test, |r, col| {
                let (m, k) = (m0 + r / g, r % g);
                let inode = m0 + 1 + col;
                if inode < m + 1 {
                    0.0
                } else {
                    weights[k] * d_legendre[m * g + k] * kernel.at_mirrored[inode - m - 1][k]
                }
            });
            let trial = Mat::<f64>::from_fn(rows, n_trial, |r, col| {
                let (m, k) = (m0 + r / g, r % g);
                let jnode = 1 + col;
                if jnode > m {
                    0.0
                } else {
                    kernel.at_nodes[m - jnode][k]
                }
            });
            let dst = acc.as_mut().submatrix_mut(m0, 0, n_test, n_trial);
            matmul(dst, Accum::Add, test.transpose(), trial.as_ref(), 1.0, Par::Seq);
        }
        m0 = m1;
    }

    // Singular parts on element m involve J ∈ {m-1, m, m+1} or I ∈ {m, m+1, m+2}.
    let jw = kernel.jacobi_left.weights();
    let jn = kernel.jacobi_left.nodes();
    let both = &kernel.jacobi_both;
    for m in 0..n {
        let d_left: Vec<f64> = jn.iter().map(|&t| sample(m, t)).collect::<Result<_>>()?;
        let d_right: Vec<f64> = jn.iter().map(|&t| sample(m, 1.0 - t)).collect::<Result<_>>()?;
        let mut d_both = Vec::with_capacity(g);
        for &t in both.nodes() {
            d_both.push(sample(m, t)?);
        }
        let both_moment: f64 = both.weights().iter().zip(&d_both).map(|(w, v)| w * v).sum();
        let mi = m as i64;
        for p in -1..=1i64 {
            let jnode = mi - p;
            if jnode < 1 || jnode >= n as i64 {
                continue;
            }
            let kp = kappa(p);
            // t^a part of the trial side against the smooth test side: I >= m + 1
            for inode in (m + 1)..n {
                let q = inode - m - 1;
                let v: f64 = (0..g).map(|k| jw[k] * d_left[k] * kernel.at_jacobi[q][k]).sum();
                acc[(inode - 1, jnode as usize - 1)] += kp * v;
            }
            // both singular
            for q in -1..=1i64 {
                let inode = mi + 1 + q;
                if inode < 1 || inode >= n as i64 {
                    continue;
                }
                acc[(inode as usize - 1, jnode as usize - 1)] += kp * kappa(q) * both_moment;
            }
        }
        for q in -1..=1i64 {
            let inode = mi + 1 + q;
            if inode < 1 || inode >= n as i64 {
                continue;
            }
            let kq = kappa(q);
            // (1-t)^a part of the test side against the smooth trial side: J <= m
            for jnode in 1..=m.min(n - 1) {
                let p = m - jnode;
                let v: f64 = (0..g).map(|k| jw[k] * d_right[k] * kernel.at_jacobi[p][k]).sum();
                acc[(inode as usize - 1, jnode - 1)] += kq * v;
            }
        }
    }
    let mut out = DenseOperator::from_mat(&acc);
    for v in out.as_mut_slice() {
        *v *= kernel.prefactor;
    }
    Ok(out)
}

/// Element-wise Gauss-Legendre quadrature of `∫ w φ_i φ_j`; tridiagonal.
pub fn assemble_reaction(mesh: &Mesh, r: &Coefficient) -> Result<DenseOperator> {
    for &b in r.breakpoints() {
        if !mesh.is_node(b) {
            return Err(Error::MisalignedCoefficient(b));
        }
    }
    let n = mesh.n_elements();
    let dofs = n - 1;
    let h = mesh.h();
    let rule = GaussRule::legendre(POINTS_PER_ELEMENT)?;
    let mut out = DenseOperator::zeros(dofs, dofs);
    if r.is_zero() {
        return Ok(out);
    }
    for m in 0..n {
        // local basis: 1 - t at node m, t at node m + 1
        let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            let x = mesh.node(m) + h * t;
            let v = r.eval(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { x });
            }
            ll += w * v * (1.0 - t) * (1.0 - t);
            lr += w * v * (1.0 - t) * t;
            rr += w * v * t * t;
        }
        let (ll, lr, rr) = (h * ll, h * lr, h * rr);
        let left = (m >= 1).then(|| m - 1);
        let right = (m + 1 < n).then_some(m);
        if let Some(i) = left {
            out.add_to(i, i, ll);
        }
        if let Some(j) = right {
            out.add_to(j, j, rr);
        }
        if let (Some(i), Some(j)) = (left, right) {
            out.add_to(i, j, lr);
            out.add_to(j, i, lr);
        }
    }
    Ok(out)
}

/// Standard mass matrix `(φ_i, φ_j)`: `2h/3` on the diagonal, `h/6` beside it.
pub fn assemble_mass(mesh: &Mesh) -> DenseOperator {
    let dofs = mesh.n_dofs();
    let h = mesh.h();
    let mut out = DenseOperator::zeros(dofs, dofs);
    for i in 0..dofs {
        out.set(i, i, 2.0 * h / 3.0);
        if i + 1 < dofs {
            out.set(i, i + 1, h / 6.0);
            out.set(i + 1, i, h / 6.0);
        }
    }
    out
}

/// Load vector `(f, φ_i)` by element-wise Gauss-Legendre quadrature.
pub fn assemble_load(mesh: &Mesh, f: &Coefficient) -> Result<Vec<f64>> {
    let n = mesh.n_elements();
    let h = mesh.h();
    let rule = GaussRule::legendre(POINTS_PER_ELEMENT)?;
    let mut out = vec![0.0; n - 1];
    if f.is_zero() {
        return Ok(out);
    }
    for m in 0..n {
        let (mut left, mut right) = (0.0, 0.0);
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            let x = mesh.node(m) + h * t;
            let v = f.eval(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { x });
            }
            left += w * v * (1.0 - t);
            right += w * v * t;
        }
        if m >= 1 {
            out[m - 1] += h * left;
        }
        if m + 1 < n {
            out[m] += h * right;
        }
    }
    Ok(out)
}

/// Gram matrix of the semi-norm `|u|_β² = ‖D^β u‖²_{L²(ℝ)}`.
///
/// With `M` the unit-coefficient diffusion matrix (sign included),
/// `uᵀ M u = -(D^β u, D̄^β u) = -cos(πβ) |u|_β²`, hence
/// `G = -(M + Mᵀ) / (2 cos πβ)`. Positive definiteness is checked by Cholesky.
pub fn assemble_seminorm_gram(mesh: &Mesh, beta: f64) -> Result<DenseOperator> {
    let m = assemble_diffusion(mesh, beta, &Coefficient::Constant(1.0))?;
    let cos = (std::f64::consts::PI * beta).cos();
    let gram = DenseOperator::from_fn(m.rows(), m.cols(), |i, j| -(m.get(i, j) + m.get(j, i)) / (2.0 * cos));
    CholeskyFactor::new(&gram, "semi-norm Gram")?;
    Ok(gram)
}
