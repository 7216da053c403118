//! Smooth compactly supported test functions and their Mellin transforms.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::quad::integrate;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-1/(1 - t^2))` with `t` the affine image of `[a, b]` onto `[-1, 1]`.
    Bump { a: f64, b: f64 },
    /// Finite linear combination.
    Combination { terms: Vec<(f64, TestFunction)> },
}

impl Default for TestFunction {
    fn default() -> Self {
        TestFunction::canonical()
    }
}

impl TestFunction {
    /// The bump on `[1, 2]`.
    pub fn canonical() -> Self {
        TestFunction::Bump { a: 1.0, b: 2.0 }
    }

    pub fn bump(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidInput(format!("bump support must satisfy 0 < a < b, got [{a}, {b}]")));
        }
        Ok(TestFunction::Bump { a, b })
    }

    pub fn combination(terms: Vec<(f64, TestFunction)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("empty test-function combination".into()));
        }
        Ok(TestFunction::Combination { terms })
    }

    /// Name as used in configuration files.
    pub fn id(&self) -> String {
        match self {
            TestFunction::Bump { a, b } => format!("bump[{a},{b}]"),
            TestFunction::Combination { terms } => {
                let parts: Vec<String> = terms.iter().map(|(c, g)| format!("{c}*{}", g.id())).collect();
                parts.join("+")
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::Bump { a, b } => (*a, *b),
            TestFunction::Combination { terms } => terms.iter().fold((f64::INFINITY, 0.0), |(lo, hi), (_, g)| {
                let (a, b) = g.support();
                (lo.min(a), hi.max(b))
            }),
        }
    }

    /// `x -> g(x / c)`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TestFunction::Bump { a, b } => TestFunction::Bump { a: a * c, b: b * c },
            TestFunction::Combination { terms } => TestFunction::Combination {
                terms: terms.iter().map(|(w, g)| (*w, g.scaled(c))).collect(),
            },
        }
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        match self {
            TestFunction::Bump { a, b } => {
                let (a, b) = (T::lit(*a), T::lit(*b));
                if x <= a || x >= b {
                    return T::zero();
                }
                let t = (x + x - a - b) / (b - a);
                let d = T::one() - t * t;
                (-T::one() / d).exp()
            }
            TestFunction::Combination { terms } => {
                terms.iter().fold(T::zero(), |acc, (w, g)| acc + T::lit(*w) * g.eval(x))
            }
        }
    }

    pub fn derivative<T: Real>(&self, x: T) -> T {
        match self {
            TestFunction::Bump { a, b } => {
                let (a, b) = (T::lit(*a), T::lit(*b));
                if x <= a || x >= b {
                    return T::zero();
                }
                let t = (x + x - a - b) / (b - a);
                let d = T::one() - t * t;
                let two = T::lit(2.0);
                (-T::one() / d).exp() * (-two * t / (d * d)) * (two / (b - a))
            }
            TestFunction::Combination { terms } => {
                terms.iter().fold(T::zero(), |acc, (w, g)| acc + T::lit(*w) * g.derivative(x))
            }
        }
    }
}

/// Default absolute accuracy of [`mellin`] in double precision.
pub const MELLIN_TOL: f64 = 1e-12;

/// `g~(s) = int_0^inf g(x) x^{s-1} dx` by adaptive quadrature over the support.
pub fn mellin<T: Real>(g: &TestFunction, s: Complex<T>, tol: T) -> Result<Complex<T>> {
    match g {
        TestFunction::Combination { terms } => {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (w, h) in terms {
                acc += mellin(h, s, tol)? * T::lit(*w);
            }
            Ok(acc)
        }
        TestFunction::Bump { a, b } => {
            // Integrate in log coordinates: int g(e^v) e^{s v} dv.
            let f = |v: T| {
                let x = v.exp();
                Complex::new(g.eval(x), T::zero()) * (s * v).exp()
            };
            let (lo, hi) = (T::lit(*a).ln(), T::lit(*b).ln());
            integrate(f, lo, hi, tol).map(|(v, _)| v)
        }
    }
}

/// Mellin transform at `f64` with the default tolerance.
pub fn mellin64(g: &TestFunction, s: crate::C64) -> Result<crate::C64> {
    mellin(g, s, MELLIN_TOL)
}
