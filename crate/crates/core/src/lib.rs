//! Numerical toolkit for Hilbert spaces `H[B]` of analytic functions on the
//! unit disk whose reproducing kernel is
//! `k(z, λ) = (1 - B(z) B(λ)*) / (1 - conj(λ) z)` for a row contraction `B`.

pub mod analysis;
pub mod error;
pub mod harmonic;
pub mod model;
pub mod spectral;
pub mod subspaces;
pub mod suite;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
