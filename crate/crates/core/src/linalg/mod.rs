//! Direct solvers for the structured operators of the implicit schemes.

mod csr;
mod dense;
mod kinetic;
mod tridiag;

pub use csr::CsrMatrix;
pub use dense::DenseLu;
pub use kinetic::{KineticLu, KineticMatrix};
pub use tridiag::CyclicTridiagonal;
