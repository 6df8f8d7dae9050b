//! Finite-volume core for the one-dimensional two-species kinetic
//! generation–recombination system on the torus.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! * [`grid`] and [`profile`]: the uniform phase-space mesh, discrete
//!   gradients, the discrete Poincaré constant and discrete velocity profiles;
//! * [`state`] and [`ledger`]: species pairs, the discrete equilibrium, the
//!   weighted geometry, the linearized collision operator with its projector,
//!   velocity moments and the hypocoercivity constants;
//! * [`flux`], [`linear`] and [`nonlinear`]: numerical fluxes, the implicit
//!   linearized stepper and the Newton-based nonlinear stepper;
//! * [`diagnostics`]: discrete Poisson solve, modified entropy, decay fits.
//!
//! IO, configuration and the experiment driver live in the `genrec` crate.
#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms, unreachable_pub)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod flux;
pub mod grid;
pub mod ledger;
pub mod linalg;
pub mod linear;
pub mod nonlinear;
pub mod profile;
pub mod state;
pub mod sum;

pub use error::{Error, Result};
pub use flux::FluxKind;
pub use grid::{GridSpec, PhaseField, SpatialField};
pub use ledger::ConstantsLedger;
pub use profile::VelocityProfile;
pub use state::{EquilibriumData, SpeciesPair};
