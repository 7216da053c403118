//! Shifted moments of four L-function families: empirical moments, recipe
//! predictions and multiple Dirichlet series residues.

pub mod arith;
pub mod characters;
pub mod coeffs;
pub mod error;
pub mod lvalues;
pub mod mds;
pub mod moments;
pub mod predict;
pub mod scalar;
pub mod specialfn;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex double used throughout the L-value and prediction layers.
pub type C64 = num_complex::Complex64;
/// Exact rational used for symbolic exponents.
pub type Q64 = num_rational::Ratio<i64>;
