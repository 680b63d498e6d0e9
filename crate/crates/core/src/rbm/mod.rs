//! Certified reduced basis methods for the affinely parametrised problem.

mod affine;
mod bench;
mod greedy;
mod io;
mod model;

pub use affine::*;
pub use bench::*;
pub use greedy::*;
pub use io::*;
pub use model::*;
