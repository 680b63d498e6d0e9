//! The model problem `-D_d^s u + r u = f` on (0, 1) with `u(0) = u(1) = 0`,
//! its Galerkin discretisation, and the four benchmark examples.

use std::f64::consts::PI;

use crate::assembly::{assemble_diffusion, assemble_load, assemble_reaction};
use crate::coefficient::{bubble, Coefficient};
use crate::dense::{solve_dense, DenseOperator};
use crate::error::Result;
use crate::fractional::FracOrder;
use crate::mesh::{Mesh, PiecewiseLinearFn};

#[derive(Debug, Clone)]
pub struct FemProblem {
    pub order: FracOrder,
    pub diffusion: Coefficient,
    pub reaction: Coefficient,
    pub load: Coefficient,
}

/// Stiffness `A = A₁ + A₂` and load vector on one mesh.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub mesh: Mesh,
    pub stiffness: DenseOperator,
    pub load: Vec<f64>,
}

impl FemSystem {
    pub fn solve(&self) -> Result<PiecewiseLinearFn> {
        let u = solve_dense(&self.stiffness, &self.load)?;
        PiecewiseLinearFn::new(self.mesh, u)
    }
}

impl FemProblem {
    pub fn stiffness(&self, mesh: &Mesh) -> Result<DenseOperator> {
        let mut a = assemble_diffusion(mesh, self.order.beta(), &self.diffusion)?;
        if !self.reaction.is_zero() {
            a.add_scaled(1.0, &assemble_reaction(mesh, &self.reaction)?)?;
        }
        Ok(a)
    }

    pub fn assemble(&self, mesh: &Mesh) -> Result<FemSystem> {
        Ok(FemSystem {
            mesh: *mesh,
            stiffness: self.stiffness(mesh)?,
            load: assemble_load(mesh, &self.load)?,
        })
    }

    pub fn solve(&self, mesh: &Mesh) -> Result<PiecewiseLinearFn> {
        self.assemble(mesh)?.solve()
    }
}

/// Named benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// `d ≡ 1`, `r ≡ 0`, `f ≡ 1`.
    Ex1,
    /// `d ≡ 1`, `r ≡ 0`, `f = x(1-x)`.
    Ex2,
    /// `d = 4 + sin 2πx`, `r = cos 2πx`, `f ≡ 1`.
    Ex3,
    /// `d`, `r` piecewise constant with a jump at 1/2, `f ≡ 1`.
    Ex4,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::Ex1, Example::Ex2, Example::Ex3, Example::Ex4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ex1 => "ex1",
            Self::Ex2 => "ex2",
            Self::Ex3 => "ex3",
            Self::Ex4 => "ex4",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn diffusion(self) -> Coefficient {
        match self {
            Self::Ex1 | Self::Ex2 => Coefficient::Constant(1.0),
            Self::Ex3 => Coefficient::sampled("4 + sin(2 pi x)", |x| 4.0 + (2.0 * PI * x).sin()),
            Self::Ex4 => Coefficient::PiecewiseConstant { breaks: vec![0.5], values: vec![5.0, 3.0] },
        }
    }

    pub fn reaction(self) -> Coefficient {
        match self {
            Self::Ex1 | Self::Ex2 => Coefficient::Constant(0.0),
            Self::Ex3 => Coefficient::sampled("cos(2 pi x)", |x| (2.0 * PI * x).cos()),
            Self::Ex4 => Coefficient::PiecewiseConstant { breaks: vec![0.5], values: vec![-2.0, 8.0] },
        }
    }

    pub fn load(self) -> Coefficient {
        match self {
            Self::Ex2 => bubble(),
            _ => Coefficient::Constant(1.0),
        }
    }

    pub fn problem(self, order: FracOrder) -> FemProblem {
        FemProblem {
            order,
            diffusion: self.diffusion(),
            reaction: self.reaction(),
            load: self.load(),
        }
    }

    /// Whether a closed-form solution is available.
    pub fn has_closed_form(self) -> bool {
        matches!(self, Self::Ex1 | Self::Ex2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn names_round_trip() {
        for e in Example::ALL {
            assert_eq!(Example::parse(e.name()), Some(e));
        }
        assert_eq!(Example::parse("ex5"), None);
    }

    #[test]
    fn ex4_coefficients_jump_at_half() {
        let d = Example::Ex4.diffusion();
        let r = Example::Ex4.reaction();
        assert_eq!((d.eval(0.25), d.eval(0.75)), (5.0, 3.0));
        assert_eq!((r.eval(0.25), r.eval(0.75)), (-2.0, 8.0));
    }

    #[test]
    fn galerkin_residual_vanishes() {
        let order = FracOrder::new(1.5).unwrap();
        let mesh = build_mesh(32).unwrap();
        for e in Example::ALL {
            let system = e.problem(order).assemble(&mesh).unwrap();
            let u = system.solve().unwrap();
            let au = system.stiffness.matvec(u.coeffs());
            let res: f64 = au.iter().zip(&system.load).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(res < 1e-12, "{e:?}: {res}");
        }
    }
}
