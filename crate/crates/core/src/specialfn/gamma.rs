//! Complex gamma function: Lanczos (g = 7, 9 terms) with reflection.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

/// `ln sin(pi z)` without overflow for large `|Im z|`; any branch.
fn ln_sin_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let i = Complex::new(T::zero(), T::one());
    let two_i = Complex::new(T::zero(), T::lit(2.0));
    if z.im >= T::zero() {
        -i * z * pi + ((i * z * (pi + pi)).exp() - T::one()).ln() - two_i.ln()
    } else {
        i * z * pi + (-(-i * z * (pi + pi)).exp() + T::one()).ln() - two_i.ln()
    }
}

fn ln_gamma_right<T: Real>(z: Complex<T>) -> Complex<T> {
    // Lanczos for Gamma(z) written as Gamma(x + 1) with x = z - 1.
    let x = z - T::one();
    let mut a = Complex::new(T::lit(LANCZOS[0]), T::zero());
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += Complex::new(T::lit(c), T::zero()) / (x + T::lit(k as f64));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    (x + T::lit(0.5)) * t.ln() - t + a.ln() + half_ln_2pi
}

/// `ln Gamma(z)` on an arbitrary branch (exact up to multiples of `2 pi i`).
pub fn ln_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_pole(z) {
        return Err(Error::Pole { what: "gamma", at: format!("{z}") });
    }
    if z.re < T::lit(0.5) {
        let one_minus = Complex::new(T::one(), T::zero()) - z;
        Ok(Complex::new(T::PI().ln(), T::zero()) - ln_sin_pi(z) - ln_gamma_right(one_minus))
    } else {
        Ok(ln_gamma_right(z))
    }
}

pub fn complex_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(ln_gamma(z)?.exp())
}

/// `1/Gamma(z)`, entire; zero at the poles of gamma.
pub fn recip_gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    match ln_gamma(z) {
        Ok(l) => (-l).exp(),
        Err(_) => Complex::new(T::zero(), T::zero()),
    }
}
