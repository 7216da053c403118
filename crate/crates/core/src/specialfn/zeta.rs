//! Riemann zeta function by Euler–Maclaurin summation.

use crate::error::{Error, Result};
use crate::C64;

// B_{2k} / (2k)!
const B2K_OVER_FACT: [f64; 14] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
    -174_611.0 / 802_857_662_698_291_200_000.0,
    77_683.0 / 14_101_100_039_391_805_440_000.0,
    -236_364_091.0 / 1_693_824_136_731_743_669_452_800_000.0,
    657_931.0 / 186_134_520_519_971_831_808_000_000.0,
    -3_392_780_147.0 / 37_893_265_687_455_865_519_472_640_000_000.0,
];

/// `zeta(s)` for `s != 1`; accurate to about `1e-14` relative for `|Im s| <= 100`.
pub fn zeta(s: C64) -> Result<C64> {
    if s == C64::new(1.0, 0.0) {
        return Err(Error::Pole { what: "zeta", at: "1".into() });
    }
    if s.re < -20.0 {
        return Err(Error::InvalidInput(format!("zeta evaluated too far left: {s}")));
    }
    let n = (30.0 + s.im.abs()).ceil() as u64;
    let nf = n as f64;
    let mut sum = C64::new(0.0, 0.0);
    for k in 1..n {
        sum += (-s * (k as f64).ln()).exp();
    }
    let n_pow = (-s * nf.ln()).exp();
    sum += n_pow * nf / (s - 1.0) + n_pow * 0.5;
    // (s)_{2k-1} N^{-s-2k+1}
    let mut rising = s;
    let mut term = n_pow / nf;
    for (k, c) in B2K_OVER_FACT.iter().enumerate() {
        sum += term * rising * *c;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        term /= nf * nf;
    }
    Ok(sum)
}
