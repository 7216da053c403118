//! Exact integer number theory: factorization, multiplicative functions,
//! Kronecker symbols and positive fundamental discriminants.

use std::sync::OnceLock;

use num_complex::{Complex64, ComplexFloat};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TRIAL_LIMIT: u64 = 1_000_000;

/// Largest input accepted by [`factorize`].
pub const FACTOR_MAX: u64 = (1u64 << 63) - 1;

fn trial_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_LIMIT))
}

/// All primes `p <= limit` by the sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::with_capacity(n / 10 + 16);
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Canonical factorization of a positive integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub value: u64,
    /// `(prime, exponent)` pairs sorted by prime.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn radical(&self) -> u64 {
        self.primes().product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin, exact for all `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    gcd(a, b)
}

// Brent's variant; only reached for composites whose prime factors all exceed TRIAL_LIMIT.
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut r = 1u64;
        let mut ys = 0;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(128.min(r - k)) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_large(d, out);
    split_large(n / d, out);
}

/// Factorizes `1 <= n <= 2^63 - 1`.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 || n > FACTOR_MAX {
        return Err(Error::InvalidInput(format!(
            "factorize expects 1 <= n <= 2^63-1, got {n}"
        )));
    }
    let mut factors = Vec::new();
    let mut m = n;
    for &p in trial_primes() {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if m > 1 {
        if m < TRIAL_LIMIT * TRIAL_LIMIT || is_prime(m) {
            factors.push((m, 1));
        } else {
            let mut big = Vec::new();
            split_large(m, &mut big);
            big.sort_unstable();
            for p in big {
                match factors.last_mut() {
                    Some((q, e)) if *q == p => *e += 1,
                    _ => factors.push((p, 1)),
                }
            }
        }
    }
    Ok(Factorization { value: n, factors })
}

/// Smallest-prime-factor table for fast bulk factorization of `n <= limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(2);
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i];
            for &p in &primes {
                let p32 = p as u32;
                if p32 > si || i * p as usize > limit {
                    break;
                }
                spf[i * p as usize] = p32;
            }
        }
        Sieve { spf, primes }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Smallest prime factor of `2 <= n <= limit`.
    #[inline]
    pub fn spf(&self, n: usize) -> usize {
        self.spf[n] as usize
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n >= 1 && n as usize <= self.limit(), "{n} outside sieve range");
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        Factorization { value: n, factors }
    }

    /// Fills `out[n] = f(n)` for `1 <= n < out.len()` for a completely multiplicative `f`
    /// given its values on primes.
    pub fn fill_completely_multiplicative<T: Copy + std::ops::Mul<Output = T>>(
        &self,
        out: &mut [T],
        one: T,
        mut at_prime: impl FnMut(u64) -> T,
    ) {
        if out.is_empty() {
            return;
        }
        assert!(out.len() - 1 <= self.limit());
        if out.len() > 1 {
            out[1] = one;
        }
        for n in 2..out.len() {
            let p = self.spf[n] as usize;
            out[n] = if p == n { at_prime(p as u64) } else { out[p] * out[n / p] };
        }
    }
}

pub fn mobius(n: u64) -> Result<i32> {
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.factors.len() % 2 == 0 { 1 } else { -1 })
}

pub fn euler_phi(n: u64) -> Result<u64> {
    let f = factorize(n)?;
    Ok(f.factors.iter().fold(n, |acc, &(p, _)| acc / p * (p - 1)))
}

pub fn is_square(n: u64) -> bool {
    let r = (n as f64).sqrt() as u64;
    (r.saturating_sub(1)..=r + 1).any(|x| x.checked_mul(x) == Some(n))
}

pub fn radical(n: u64) -> Result<u64> {
    Ok(factorize(n)?.radical())
}

const KRONECKER_TAB: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// Kronecker symbol `(d | n)` for arbitrary integers.
pub fn kronecker(d: i64, n: i64) -> i32 {
    let (mut a, mut b) = (d as i128, n as i128);
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a & 1 == 0 && b & 1 == 0 {
        return 0;
    }
    let v = b.trailing_zeros();
    b >>= v;
    let mut k = if v % 2 == 0 { 1 } else { KRONECKER_TAB[(a & 7) as usize] };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    loop {
        if a == 0 {
            return if b > 1 { 0 } else { k };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= KRONECKER_TAB[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

fn squarefree_i64(m: i64) -> bool {
    m != 0 && factorize(m.unsigned_abs()).map(|f| f.is_squarefree()).unwrap_or(false)
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree_i64(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree_i64(m)
        }
        _ => false,
    }
}

/// A positive fundamental discriminant (`1` included, giving the trivial character).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FundamentalDiscriminant(u64);

impl FundamentalDiscriminant {
    pub fn new(d: u64) -> Result<Self> {
        if d <= i64::MAX as u64 && is_fundamental_discriminant(d as i64) {
            Ok(Self(d))
        } else {
            Err(Error::InvalidInput(format!("{d} is not a positive fundamental discriminant")))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `chi_d(n)`.
    pub fn chi(self, n: i64) -> i32 {
        kronecker(self.0 as i64, n)
    }
}

fn squarefree_table(limit: usize) -> Vec<bool> {
    let mut sf = vec![true; limit + 1];
    if limit >= 1 {
        sf[0] = false;
    }
    let mut p = 2usize;
    while p * p <= limit {
        let sq = p * p;
        let mut j = sq;
        while j <= limit {
            sf[j] = false;
            j += sq;
        }
        p += 1;
    }
    sf
}

/// Ascending positive fundamental discriminants `d <= limit` with `gcd(d, coprime_to) = 1`.
pub fn list_fundamental_discriminants(
    limit: u64,
    coprime_to: u64,
) -> Vec<FundamentalDiscriminant> {
    fundamental_discriminants_in(1, limit, coprime_to)
}

/// Positive fundamental discriminants in `[lo, hi]` coprime to `coprime_to`.
pub fn fundamental_discriminants_in(lo: u64, hi: u64, coprime_to: u64) -> Vec<FundamentalDiscriminant> {
    if hi < lo.max(1) {
        return Vec::new();
    }
    let sf = squarefree_table(hi as usize);
    let coprime_to = coprime_to.max(1);
    (lo.max(1)..=hi)
        .filter(|&d| {
            let fund = match d % 4 {
                1 => sf[d as usize],
                0 => {
                    let m = d / 4;
                    matches!(m % 4, 2 | 3) && sf[m as usize]
                }
                _ => false,
            };
            fund && gcd(d, coprime_to) == 1
        })
        .map(FundamentalDiscriminant)
        .collect()
}

/// `a(n) = prod_{p | n} p / (p + 1)`, exact.
pub fn a_factor(n: u64) -> Result<Ratio<u64>> {
    let f = factorize(n)?;
    Ok(f.primes().fold(Ratio::from_integer(1u64), |acc, p| acc * Ratio::new(p, p + 1)))
}

/// `a(n)` as a float, from a precomputed factorization.
pub fn a_factor_f64(f: &Factorization) -> f64 {
    f.primes().map(|p| p as f64 / (p as f64 + 1.0)).product()
}

/// Generalized divisor function `tau(R; n) = sum_{n_1...n_k = n} prod n_i^{-r_i}`.
pub fn gen_divisor(shifts: &[Complex64], n: u64) -> Result<Complex64> {
    if shifts.is_empty() {
        return Err(Error::InvalidInput("gen_divisor needs at least one shift".into()));
    }
    let divs = factorize(n)?.divisors();
    Ok(gen_divisor_rec(shifts, n, &divs))
}

fn gen_divisor_rec(shifts: &[Complex64], n: u64, divs: &[u64]) -> Complex64 {
    let (first, rest) = shifts.split_first().expect("non-empty");
    if rest.is_empty() {
        return (n as f64).powc(-first);
    }
    divs.iter()
        .filter(|&&d| n % d == 0)
        .map(|&d| (d as f64).powc(-first) * gen_divisor_rec(rest, n / d, divs))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(12).unwrap().factors, vec![(2, 2), (3, 1)]);
        assert!(factorize(1).unwrap().factors.is_empty());
        assert!(trial_is_prime(1_000_003));
        assert_eq!(factorize(1_000_003).unwrap().factors, vec![(1_000_003, 1)]);
        assert!(factorize(0).is_err());
        assert!(factorize(u64::MAX).is_err());
    }

    #[test]
    fn factorize_large_semiprime() {
        let (p, q) = (1_000_000_007u64, 998_244_353u64);
        let f = factorize(p * q).unwrap();
        assert_eq!(f.factors, vec![(q, 1), (p, 1)]);
        let f = factorize(FACTOR_MAX).unwrap();
        assert_eq!(f.factors.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), FACTOR_MAX);
        assert!(f.factors.iter().all(|&(p, _)| is_prime(p)));
    }

    #[test]
    fn multiplicative_examples() {
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(euler_phi(5).unwrap(), 4);
        assert!(is_square(36));
        assert!(!is_square(35));
    }

    #[test]
    fn mobius_phi_against_definitions() {
        for n in 1..=10_000u64 {
            let phi = (1..=n).filter(|&a| gcd(a, n) == 1).count() as u64;
            assert_eq!(euler_phi(n).unwrap(), phi, "phi({n})");
            // sum_{d | n} mu(d) = [n = 1]
            let divs = factorize(n).unwrap().divisors();
            let s: i32 = divs.iter().map(|&d| mobius(d).unwrap()).sum();
            assert_eq!(s, i32::from(n == 1));
        }
    }

    #[test]
    fn kronecker_examples() {
        // 5 mod 3 = 2, a non-residue mod 3.
        assert_eq!(kronecker(5, 3), -1);
        assert_eq!(kronecker(5, 5), 0);
        // 8 = 1 mod 7
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(1, 0), 1);
        assert_eq!(kronecker(-1, -1), -1);
    }

    #[test]
    fn kronecker_matches_legendre_brute_force() {
        for &p in primes_up_to(200).iter().skip(1) {
            let squares: Vec<u64> = (1..p).map(|x| x * x % p).collect();
            for d in -60i64..=60 {
                let r = d.rem_euclid(p as i64) as u64;
                let expect = if r == 0 {
                    0
                } else if squares.contains(&r) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(d, p as i64), expect, "({d}|{p})");
            }
        }
    }

    #[test]
    fn fundamental_discriminant_lists() {
        let l: Vec<u64> = list_fundamental_discriminants(20, 1).iter().map(|d| d.get()).collect();
        assert_eq!(l, vec![1, 5, 8, 12, 13, 17]);
        let l: Vec<u64> = list_fundamental_discriminants(20, 2).iter().map(|d| d.get()).collect();
        assert_eq!(l, vec![1, 5, 13, 17]);
        assert!(!is_fundamental_discriminant(9));
        assert!(is_fundamental_discriminant(-4));
        assert!(is_fundamental_discriminant(-3));
        for d in 1..=2000i64 {
            let listed = fundamental_discriminants_in(d as u64, d as u64, 1).len() == 1;
            assert_eq!(listed, is_fundamental_discriminant(d), "{d}");
        }
    }

    #[test]
    fn a_factor_examples() {
        assert_eq!(a_factor(1).unwrap(), Ratio::from_integer(1));
        assert_eq!(a_factor(12).unwrap(), Ratio::new(1, 2));
        assert_eq!(a_factor(7).unwrap(), Ratio::new(7, 8));
        for n in 1..=10_000u64 {
            assert_eq!(a_factor(n).unwrap(), a_factor(radical(n).unwrap()).unwrap());
        }
    }

    #[test]
    fn gen_divisor_examples() {
        let s = Complex64::new(0.3, 1.1);
        let v = gen_divisor(&[s], 10).unwrap();
        assert!((v - 10f64.powc(-s)).norm() < 1e-14);
        let z = Complex64::new(0.0, 0.0);
        assert!((gen_divisor(&[z, z], 12).unwrap() - 6.0).norm() < 1e-14);
        let h = Complex64::new(0.5, 0.0);
        assert!((gen_divisor(&[h, h], 4).unwrap() - 1.5).norm() < 1e-14);
    }

    #[test]
    fn gen_divisor_multiplicative() {
        let r = [Complex64::new(0.2, 0.5), Complex64::new(0.7, -0.1)];
        for m in 1..=1000u64 {
            for n in 1..=(1000 / m) {
                if gcd(m, n) != 1 {
                    continue;
                }
                let lhs = gen_divisor(&r, m * n).unwrap();
                let rhs = gen_divisor(&r, m).unwrap() * gen_divisor(&r, n).unwrap();
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "{m} {n}");
            }
        }
    }

    #[test]
    fn sieve_agrees_with_factorize() {
        let s = Sieve::new(5000);
        for n in 1..=5000 {
            assert_eq!(s.factorize(n), factorize(n).unwrap());
        }
        let mut chi = vec![0i32; 2001];
        s.fill_completely_multiplicative(&mut chi, 1, |p| kronecker(13, p as i64));
        for n in 1..=2000 {
            assert_eq!(chi[n], kronecker(13, n as i64));
        }
    }
}
