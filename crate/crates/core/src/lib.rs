//! Exact degree and height computations for monomial maps and monomial
//! correspondences on the algebraic torus.
//!
//! A correspondence is given by two nonsingular integer matrices `(M, N)` and
//! sends `x` to `φ(N)(φ(M)⁻¹(x))`. Everything here reduces to the integer
//! matrix `P = N · adj(M)`.

pub mod degrees;
pub mod ensemble;
pub mod heights;
pub mod linalg;
pub mod polytope;
pub mod real;
pub mod spectral;

pub use linalg::{IntMatrix, IntPolynomial, LinalgError};
pub use real::Real;
