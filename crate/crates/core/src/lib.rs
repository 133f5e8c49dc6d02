//! Numerical core for equivariant zeta-regularized traces and localized index
//! pairings on codimension-one foliated flows.
//!
//! The crate is `no_std` with `alloc`. IO, configuration and reports live in
//! the `residue-index` companion crate.

#![no_std]

extern crate alloc;

pub use num_complex::Complex64 as C64;

mod error;
pub mod linalg;
pub mod fourier;
pub mod symbol_calculus;
pub mod equivariant_residue;
pub mod mellin;
pub mod foliated_groupoid;
pub mod index_harness;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) const TAU: f64 = core::f64::consts::TAU;

/// `e^{2πi x}`.
#[inline]
pub fn cis_tau(x: f64) -> C64 {
    let a = TAU * x;
    C64::new(libm::cos(a), libm::sin(a))
}
