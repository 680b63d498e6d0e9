//! Dense row-major matrices, direct solvers and export formats.

use std::io::Write;

use faer::linalg::solvers::{Llt, PartialPivLu, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Dense real matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Size(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.data[i * n + i] = 1.0;
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_mat(m: &Mat<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += a * xi;
                }
            }
        }
        out
    }

    /// `vᵀ A u`.
    pub fn bilinear(&self, v: &[f64], u: &[f64]) -> f64 {
        dot(v, &self.matvec(u))
    }

    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &DenseOperator) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Size(format!(
                "cannot add {}x{} to {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Row-major CSV with 17 significant digits, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads the output of [`write_csv`](Self::write_csv).
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t}: {e}"))))
                .collect::<Result<_>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Parse(format!("ragged row {rows}: {} vs {c}", row.len())))
                }
                _ => {}
            }
            data.extend(row);
            rows += 1;
        }
        Self::new(rows, cols.unwrap_or(0), data)
    }

    /// Matrix Market coordinate format (general, real), 1-based indices,
    /// exact zeros omitted.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        let nnz = self.data.iter().filter(|v| **v != 0.0).count();
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.rows, self.cols, nnz)?;
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "{} {} {v:.16e}", i + 1, j + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Writes a vector as a one-column CSV with 17 significant digits.
pub fn write_vector_csv<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    for x in v {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn column(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

/// LU factorization with partial pivoting and a pivot-size guard.
pub struct LuFactor {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl LuFactor {
    /// Fails with [`Error::Singular`] if some pivot is below `1e-14 ‖A‖_∞`.
    pub fn new(a: &DenseOperator) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Size(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let lu = a.to_mat().partial_piv_lu();
        let threshold = 1e-14 * a.norm_inf();
        let u = lu.U();
        for k in 0..a.rows {
            let pivot = u[(k, k)].abs();
            if !(pivot > threshold) {
                return Err(Error::Singular { pivot, threshold });
            }
        }
        Ok(Self { lu, n: a.rows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let x = self.lu.solve(column(b));
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Solves `A x = b` by LU with partial pivoting and checks
/// `‖Ax - b‖₂ / ‖b‖₂ ≤ 1e-10`.
pub fn solve_dense(a: &DenseOperator, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return Err(Error::Size(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows
        )));
    }
    let x = LuFactor::new(a)?.solve(b);
    let bnorm = norm2(b);
    if bnorm > 0.0 {
        let r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
        let rel = norm2(&r) / bnorm;
        if !(rel <= 1e-10) {
            return Err(Error::InaccurateSolve(rel));
        }
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting for small row-major systems,
/// without the allocation and dispatch overhead of the blocked kernels.
pub fn solve_small(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Size(format!("expected a {n}x{n} matrix, got {} entries", a.len())));
    }
    let scale = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let threshold = 1e-14 * scale;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .expect("non-empty range");
        let pivot = a[p * n + k].abs();
        if !(pivot > threshold) {
            return Err(Error::Singular { pivot, threshold });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            if l != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let tail: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - tail) / a[k * n + k];
    }
    Ok(b)
}

/// Cholesky factor of a symmetric positive definite matrix.
pub struct CholeskyFactor {
    llt: Llt<f64>,
    n: usize,
}

impl CholeskyFactor {
    pub fn new(a: &DenseOperator, what: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Size(format!("Cholesky needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let llt = a
            .to_mat()
            .llt(Side::Lower)
            .map_err(|_| Error::Indefinite(what.to_string()))?;
        Ok(Self { llt, n: a.rows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let x = self.llt.solve(column(b));
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for every column of `b` at once.
    pub fn solve_columns(&self, b: &Mat<f64>) -> Mat<f64> {
        self.llt.solve(b)
    }
}

/// Outcome of [`gmres`].
#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES(m) without preconditioning, starting from zero.
pub fn gmres(a: &DenseOperator, b: &[f64], restart: usize, tol: f64, max_iter: usize) -> Result<GmresOutcome> {
    let n = a.rows;
    if !a.is_square() || b.len() != n {
        return Err(Error::Size("GMRES needs a square matrix and matching right-hand side".into()));
    }
    let restart = restart.max(1).min(n.max(1));
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, iterations: 0, relative_residual: 0.0, converged: true });
    }
    let mut iterations = 0;
    loop {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= tol || iterations >= max_iter {
            return Ok(GmresOutcome {
                x,
                iterations,
                relative_residual: beta / bnorm,
                converged: beta / bnorm <= tol,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns reduced on the fly by Givens rotations.
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let mut w = a.matvec(&basis[k]);
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hij * vj;
                }
            }
            let wnorm = norm2(&w);
            col[k + 1] = wnorm;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a0, a1) = (col[i], col[i + 1]);
                col[i] = c * a0 + s * a1;
                col[i + 1] = -s * a0 + c * a1;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
            col[k] = denom;
            col[k + 1] = 0.0;
            cs.push((c, s));
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(col);
            iterations += 1;
            k += 1;
            let done = g[k].abs() / bnorm <= tol || wnorm == 0.0;
            if !done {
                basis.push(w.iter().map(|v| v / wnorm).collect());
            }
            if done {
                break;
            }
        }
        // back substitution for the k x k triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}
