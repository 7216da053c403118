//! Gamma function, chi-factors, test functions with Mellin transforms,
//! the zeta function and AFE weights.

mod afe;
mod chi;
mod gamma;
mod quad;
mod testfn;
mod zeta;

pub use afe::{afe_weight, GammaFactor, WeightTable, WEIGHT_FLOOR};
pub use chi::{chi_factor, ChiFactorKind};
pub use gamma::{complex_gamma, ln_gamma, recip_gamma};
pub use quad::integrate;
pub use testfn::{mellin, mellin64, TestFunction, MELLIN_TOL};
pub use zeta::zeta;
