//! Adaptive Gauss–Kronrod (7/15) quadrature of complex-valued integrands.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gk15<T: Real, F: Fn(T) -> Complex<T>>(f: &F, a: T, b: T) -> (Complex<T>, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let pair = f(c - dx) + f(c + dx);
        k += pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            g += pair * T::lit(WG[j / 2]);
        }
    }
    ((k * h), ((k - g) * h).norm())
}

/// Integral of `f` over `[a, b]` with absolute error target `tol`.
/// Returns the value and the summed error estimate.
pub fn integrate<T: Real, F: Fn(T) -> Complex<T>>(f: F, a: T, b: T, tol: T) -> Result<(Complex<T>, T)> {
    let floor = T::eps() * T::lit(64.0);
    let mut pending = vec![(a, b, gk15(&f, a, b))];
    let mut total = Complex::new(T::zero(), T::zero());
    let mut err = T::zero();
    let mut intervals = 1usize;
    while let Some((lo, hi, (v, e))) = pending.pop() {
        let width = (hi - lo) / (b - a);
        let local_tol = (tol * width).max(floor * v.norm());
        if e <= local_tol || intervals >= MAX_INTERVALS || (hi - lo) <= floor * (b - a) {
            total += v;
            err += e;
            continue;
        }
        let mid = (lo + hi) * T::lit(0.5);
        intervals += 1;
        pending.push((lo, mid, gk15(&f, lo, mid)));
        pending.push((mid, hi, gk15(&f, mid, hi)));
    }
    let achieved_floor = floor * total.norm();
    if err > tol.max(achieved_floor) * T::lit(10.0) {
        return Err(Error::Quadrature {
            achieved: err.to_f64().unwrap_or(f64::NAN),
            requested: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((total, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn polynomial_and_oscillatory() {
        let (v, _) = integrate(|x: f64| C64::new(x * x, 0.0), 0.0, 3.0, 1e-13).unwrap();
        assert!((v.re - 9.0).abs() < 1e-12);
        let (v, _) = integrate(|x: f64| C64::new(0.0, 50.0 * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        let exact = (C64::new(0.0, 50.0).exp() - 1.0) / C64::new(0.0, 50.0);
        assert!((v - exact).norm() < 1e-11);
        let (v, _) = integrate(|x: f32| Complex::new(x.cos(), 0.0), 0.0, 1.0, 1e-6).unwrap();
        assert!((v.re - 1f32.sin()).abs() < 1e-6);
    }
}
