//! The chi-factors relating `L(s)` to `L(1 - s)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChiFactorKind {
    /// `X(s) = pi^{s - 1/2} Gamma((1 - s)/2) / Gamma(s/2)`.
    Riemann,
    /// `X_f(s) = i^k (2 pi)^{2s - 1} Gamma(1 - s + (k-1)/2) / Gamma(s + (k-1)/2)`.
    Modular { weight: u32 },
    /// `X_E(s) = eps (sqrt N / 2 pi)^{1 - 2s} Gamma(3/2 - s) / Gamma(1/2 + s)`.
    Elliptic { conductor: u64, root_number: i8 },
}

impl ChiFactorKind {
    pub fn validate(self) -> Result<Self> {
        match self {
            ChiFactorKind::Riemann => Ok(self),
            ChiFactorKind::Modular { weight } if weight >= 2 && weight % 2 == 0 => Ok(self),
            ChiFactorKind::Modular { weight } => {
                Err(Error::InvalidInput(format!("modular weight must be even and >= 2, got {weight}")))
            }
            ChiFactorKind::Elliptic { conductor, root_number } => {
                if conductor == 0 || crate::arith::is_square(conductor) {
                    return Err(Error::InvalidInput(format!(
                        "elliptic conductor must be a positive non-square, got {conductor}"
                    )));
                }
                if root_number != 1 && root_number != -1 {
                    return Err(Error::InvalidInput(format!("root number must be +-1, got {root_number}")));
                }
                Ok(self)
            }
        }
    }

    /// Short label used in reports.
    pub fn label(self) -> String {
        match self {
            ChiFactorKind::Riemann => "X".into(),
            ChiFactorKind::Modular { weight } => format!("X_f[k={weight}]"),
            ChiFactorKind::Elliptic { conductor, root_number } => {
                format!("X_E[N={conductor},eps={root_number}]")
            }
        }
    }
}

fn gamma_ratio<T: Real>(num: Complex<T>, den: Complex<T>) -> Result<Complex<T>> {
    let n = ln_gamma(num)?;
    match ln_gamma(den) {
        Ok(d) => Ok((n - d).exp()),
        Err(_) => Ok(Complex::new(T::zero(), T::zero())),
    }
}

pub fn chi_factor<T: Real>(kind: ChiFactorKind, s: Complex<T>) -> Result<Complex<T>> {
    let one = T::one();
    let half = T::lit(0.5);
    let two_pi = T::PI() + T::PI();
    match kind {
        ChiFactorKind::Riemann => {
            let r = gamma_ratio((Complex::new(one, T::zero()) - s) * half, s * half)?;
            Ok(Complex::new(T::PI(), T::zero()).powc(s - half) * r)
        }
        ChiFactorKind::Modular { weight } => {
            let a = T::lit((weight as f64 - 1.0) / 2.0);
            let r = gamma_ratio(Complex::new(one + a, T::zero()) - s, s + a)?;
            let ik = match weight % 4 {
                0 => one,
                _ => -one,
            };
            Ok(Complex::new(two_pi, T::zero()).powc(s * T::lit(2.0) - one) * r * ik)
        }
        ChiFactorKind::Elliptic { conductor, root_number } => {
            let r = gamma_ratio(Complex::new(T::lit(1.5), T::zero()) - s, s + half)?;
            let base = T::lit(conductor as f64).sqrt() / two_pi;
            let eps = T::lit(root_number as f64);
            Ok(Complex::new(base, T::zero()).powc(Complex::new(one, T::zero()) - s * T::lit(2.0)) * r * eps)
        }
    }
}
