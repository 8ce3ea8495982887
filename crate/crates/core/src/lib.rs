//! Numerical verification of trace and restriction inequalities on the
//! level sets `Σ_a = {a(ξ) = 1}` of elliptic, positively homogeneous
//! degree-2 symbols.
//!
//! Fourier transforms follow `f̂(ξ) = ∫ e^{-ix·ξ} f(x) dx` with the factor
//! `(2π)^{-n}` on the inverse, so `‖f‖ = (2π)^{-n/2} ‖f̂‖`.

pub mod constants;
pub mod error;
pub mod fields;
pub mod quadrature;
pub mod special;
pub mod surfaces;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
