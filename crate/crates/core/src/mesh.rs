//! Uniform meshes of (0, 1) and the continuous piecewise-linear space on them.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mesh {
    n_elements: usize,
}

/// Uniform mesh with `n_elements` cells; `h = 1 / n_elements`.
pub fn build_mesh(n_elements: usize) -> Result<Mesh> {
    Mesh::new(n_elements)
}

impl Mesh {
    pub fn new(n_elements: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::Size(format!(
                "a mesh needs at least 2 elements, got {n_elements}"
            )));
        }
        Ok(Self { n_elements })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Number of interior degrees of freedom.
    pub fn n_dofs(&self) -> usize {
        self.n_elements - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_elements as f64
    }

    /// Node `i` for `0 <= i <= n_elements`, computed as `i / N` so that nested
    /// meshes share bit-identical nodes.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_elements as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_elements).map(|i| self.node(i)).collect()
    }

    /// Index of the element containing `x`; the right end belongs to the last element.
    pub fn element_of(&self, x: f64) -> usize {
        let k = (x * self.n_elements as f64).floor();
        (k.max(0.0) as usize).min(self.n_elements - 1)
    }

    /// Returns the refinement factor if `fine` refines `self`.
    pub fn refinement_factor(&self, fine: &Mesh) -> Result<usize> {
        if fine.n_elements < self.n_elements || !fine.n_elements.is_multiple_of(self.n_elements) {
            return Err(Error::Nesting {
                coarse: self.n_elements,
                fine: fine.n_elements,
            });
        }
        Ok(fine.n_elements / self.n_elements)
    }

    /// True if `x` coincides with a mesh node up to rounding.
    pub fn is_node(&self, x: f64) -> bool {
        let scaled = x * self.n_elements as f64;
        (scaled - scaled.round()).abs() <= 1e-10 * self.n_elements as f64
    }
}

/// A continuous piecewise-linear function vanishing at 0 and 1, stored by its
/// interior nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn {
    mesh: Mesh,
    coeffs: Vec<f64>,
}

impl PiecewiseLinearFn {
    pub fn new(mesh: Mesh, interior_coeffs: Vec<f64>) -> Result<Self> {
        if interior_coeffs.len() != mesh.n_dofs() {
            return Err(Error::Size(format!(
                "expected {} interior coefficients, got {}",
                mesh.n_dofs(),
                interior_coeffs.len()
            )));
        }
        Ok(Self { mesh, coeffs: interior_coeffs })
    }

    pub fn zero(mesh: Mesh) -> Self {
        Self { mesh, coeffs: vec![0.0; mesh.n_dofs()] }
    }

    /// Builds the function from all `N + 1` nodal values; the boundary values
    /// must vanish.
    pub fn from_nodal_values(mesh: Mesh, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.n_elements() + 1 {
            return Err(Error::Size(format!(
                "expected {} nodal values, got {}",
                mesh.n_elements() + 1,
                values.len()
            )));
        }
        let (first, last) = (values[0], values[values.len() - 1]);
        if first != 0.0 || last != 0.0 {
            return Err(Error::Domain(format!(
                "boundary values must vanish, got {first} and {last}"
            )));
        }
        Self::new(mesh, values[1..values.len() - 1].to_vec())
    }

    /// Nodal interpolant of `f` at the interior nodes.
    pub fn interpolate(mesh: Mesh, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = (1..mesh.n_elements()).map(|i| f(mesh.node(i))).collect();
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Value at node `i` in `0..=N`, including the zero boundary values.
    pub fn nodal_value(&self, i: usize) -> f64 {
        if i == 0 || i == self.mesh.n_elements() {
            0.0
        } else {
            self.coeffs[i - 1]
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let m = self.mesh.element_of(x);
        let t = (x - self.mesh.node(m)) * self.mesh.n_elements() as f64;
        (1.0 - t) * self.nodal_value(m) + t * self.nodal_value(m + 1)
    }

    /// Slope jumps `(x_k, σ_k)` at every node where the slope changes, so that
    /// `f(x) = Σ σ_k (x - x_k)_+` on the whole line.
    pub fn slope_jumps(&self) -> Vec<(f64, f64)> {
        let n = self.mesh.n_elements();
        let inv_h = n as f64;
        let mut out = Vec::with_capacity(n + 1);
        let mut previous_slope = 0.0;
        for k in 0..=n {
            let slope = if k < n {
                (self.nodal_value(k + 1) - self.nodal_value(k)) * inv_h
            } else {
                0.0
            };
            let jump = slope - previous_slope;
            if jump != 0.0 {
                out.push((self.mesh.node(k), jump));
            }
            previous_slope = slope;
        }
        out
    }

    /// Prolongs to a nested finer mesh by evaluation at the fine nodes.
    pub fn prolong(&self, fine: Mesh) -> Result<Self> {
        let factor = self.mesh.refinement_factor(&fine)?;
        let coeffs = (1..fine.n_elements())
            .map(|i| {
                let m = i / factor;
                let r = (i % factor) as f64 / factor as f64;
                if r == 0.0 {
                    self.nodal_value(m)
                } else {
                    (1.0 - r) * self.nodal_value(m) + r * self.nodal_value(m + 1)
                }
            })
            .collect();
        Ok(Self { mesh: fine, coeffs })
    }

    /// Mirror image `x ↦ f(1 - x)`.
    pub fn mirrored(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self { mesh: self.mesh, coeffs }
    }

    /// Smallest point of the support, or `None` for the zero function.
    pub fn support_start(&self) -> Option<f64> {
        self.slope_jumps().first().map(|&(x, _)| x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_element_mesh() {
        let mesh = build_mesh(2).unwrap();
        assert_eq!(mesh.nodes(), vec![0.0, 0.5, 1.0]);
        assert_eq!(mesh.n_dofs(), 1);
    }

    #[test]
    fn dof_counts_for_powers_of_two() {
        assert_eq!(build_mesh(1 << 9).unwrap().n_dofs(), 511);
        assert_eq!(build_mesh(1 << 8).unwrap().n_dofs(), 255);
    }

    #[test]
    fn rejects_tiny_meshes() {
        assert!(matches!(build_mesh(1), Err(Error::Size(_))));
        assert!(build_mesh(0).is_err());
    }

    #[test]
    fn nodes_are_equispaced() {
        let mesh = build_mesh(37).unwrap();
        let nodes = mesh.nodes();
        for w in nodes.windows(2) {
            assert!((w[1] - w[0] - mesh.h()).abs() < 1e-14);
        }
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 1.0);
    }

    #[test]
    fn nodal_values_must_vanish_on_boundary() {
        let mesh = build_mesh(4).unwrap();
        assert!(PiecewiseLinearFn::from_nodal_values(mesh, &[0.0, 1.0, 2.0, 1.0, 0.0]).is_ok());
        assert!(matches!(
            PiecewiseLinearFn::from_nodal_values(mesh, &[0.1, 1.0, 2.0, 1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hat_slope_jumps() {
        let mesh = build_mesh(4).unwrap();
        let hat = PiecewiseLinearFn::new(mesh, vec![0.0, 1.0, 0.0]).unwrap();
        let jumps = hat.slope_jumps();
        assert_eq!(jumps, vec![(0.25, 4.0), (0.5, -8.0), (0.75, 4.0)]);
        assert_eq!(hat.support_start(), Some(0.25));
    }

    #[test]
    fn nesting_is_checked() {
        let coarse = build_mesh(4).unwrap();
        assert_eq!(coarse.refinement_factor(&build_mesh(16).unwrap()).unwrap(), 4);
        assert!(matches!(
            coarse.refinement_factor(&build_mesh(6).unwrap()),
            Err(Error::Nesting { .. })
        ));
    }

    proptest! {
        #[test]
        fn jump_representation_reproduces_values(
            vals in prop::collection::vec(-5.0f64..5.0, 1..12),
            x in 0.0f64..1.0,
        ) {
            let mesh = build_mesh(vals.len() + 1).unwrap();
            let f = PiecewiseLinearFn::new(mesh, vals).unwrap();
            let sum: f64 = f.slope_jumps().iter().map(|&(xk, s)| s * (x - xk).max(0.0)).sum();
            prop_assert!((sum - f.eval(x)).abs() < 1e-9);
            // zero extension past 1
            let beyond: f64 = f.slope_jumps().iter().map(|&(xk, s)| s * (1.5 - xk)).sum();
            prop_assert!(beyond.abs() < 1e-9);
        }

        #[test]
        fn prolongation_preserves_values(
            vals in prop::collection::vec(-5.0f64..5.0, 1..9),
            factor in 1usize..5,
            x in 0.0f64..1.0,
        ) {
            let mesh = build_mesh(vals.len() + 1).unwrap();
            let f = PiecewiseLinearFn::new(mesh, vals).unwrap();
            let fine = f.prolong(build_mesh(mesh.n_elements() * factor).unwrap()).unwrap();
            prop_assert!((fine.eval(x) - f.eval(x)).abs() < 1e-12);
        }
    }
}
