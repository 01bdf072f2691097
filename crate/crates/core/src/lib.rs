//! Staggered-grid finite-difference solver for the isentropic compressible
//! Cahn-Hilliard-Navier-Stokes equations with partitioned IMEX Runge-Kutta time stepping.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command line live in the
//! `chns` companion crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cahn_hilliard;
pub mod convection;
pub mod diagnostics;
pub mod error;
pub mod fdops;
pub mod forces;
pub mod grid;
pub mod imex;
pub mod linsolve;
pub mod mat;
pub mod mms;
pub mod params;
pub mod scenario;
pub mod sparse;
pub mod viscosity;

pub use error::{Error, Result};
pub use grid::{Fields, MacGrid, State};
pub use mat::Mat;
pub use params::ModelParams;
