//! Finite elements and certified reduced basis methods for one-dimensional
//! Riemann-Liouville fractional boundary-value problems
//!
//! ```text
//! -D^{s/2}( d(x) D^{s/2} u ) + r(x) u = f   on (0, 1),   u(0) = u(1) = 0,
//! ```
//!
//! with `s ∈ (1, 2)`, left-sided outer and right-sided inner derivatives in
//! the weak form, piecewise-linear elements on uniform meshes and dense
//! nonlocal stiffness matrices.

pub mod assembly;
pub mod coefficient;
pub mod constants;
pub mod convergence;
pub mod dense;
pub mod error;
pub mod fractional;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod quadrature;
pub mod rates;
pub mod rbm;
pub mod report;
pub mod solutions;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
