use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use super::cache::{CacheLookup, CoefficientCache};
use super::{assemble, local_powers, HeckeSource};
use crate::arith::{is_prime, is_square, Sieve};
use crate::error::{Error, Result};

/// An elliptic curve over Q in long Weierstrass form with its conductor,
/// root number and bad-prime data supplied.
#[derive(Debug)]
pub struct EllipticCurve {
    label: String,
    a: [i64; 5],
    conductor: u64,
    root_number: i8,
    bad: BTreeMap<u64, i8>,
    cache: Option<CoefficientCache>,
    dense: RwLock<Arc<Vec<f64>>>,
}

fn rem(x: i128, p: u64) -> u64 {
    x.rem_euclid(p as i128) as u64
}

/// `#E(F_p)` including the point at infinity, for the cubic with
/// `a = [a1, a2, a3, a4, a6]` (singular reductions are counted as curves too).
pub fn point_count(a: [i64; 5], p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if p > u32::MAX as u64 {
        return Err(Error::InvalidInput(format!("point counting limited to p < 2^32, got {p}")));
    }
    Ok(count_with(a, p, &mut Vec::new()))
}

fn count_with(a: [i64; 5], p: u64, qr: &mut Vec<u8>) -> u64 {
    let [a1, a2, a3, a4, a6] = a.map(|x| x as i128);
    if p == 2 {
        let mut n = 1;
        for x in 0..2i128 {
            for y in 0..2i128 {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                if (lhs - rhs).rem_euclid(2) == 0 {
                    n += 1;
                }
            }
        }
        return n;
    }
    // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    let b2 = a1 * a1 + 4 * a2;
    let b4 = 2 * a4 + a1 * a3;
    let b6 = a3 * a3 + 4 * a6;
    qr.clear();
    qr.resize(p as usize, 0);
    let mut sq = 0u64;
    for y in 1..=(p - 1) / 2 {
        sq += 2 * y - 1;
        if sq >= p {
            sq -= p;
        }
        qr[sq as usize] = 1;
    }
    // Finite differences of f(x) = 4x^3 + b2 x^2 + 2 b4 x + b6.
    let mut f = rem(b6, p);
    let mut d1 = rem(4 + b2 + 2 * b4, p);
    let mut d2 = rem(24 + 2 * b2, p);
    let d3 = 24 % p;
    let mut affine = 0u64;
    for _ in 0..p {
        affine += if f == 0 { 1 } else { 2 * qr[f as usize] as u64 };
        f += d1;
        if f >= p {
            f -= p;
        }
        d1 += d2;
        if d1 >= p {
            d1 -= p;
        }
        d2 += d3;
        if d2 >= p {
            d2 -= p;
        }
    }
    affine + 1
}

impl EllipticCurve {
    /// `bad` lists `(p, a_p)` for every prime `p | conductor`, `a_p` in `{-1, 0, 1}`.
    pub fn new(
        label: &str,
        a: [i64; 5],
        conductor: u64,
        root_number: i8,
        bad: &[(u64, i8)],
    ) -> Result<Self> {
        if conductor == 0 || is_square(conductor) {
            return Err(Error::InvalidInput(format!("conductor must be a non-square, got {conductor}")));
        }
        if root_number != 1 && root_number != -1 {
            return Err(Error::InvalidInput(format!("root number must be +-1, got {root_number}")));
        }
        let mut map = BTreeMap::new();
        for &(p, ap) in bad {
            if !is_prime(p) || conductor % p != 0 {
                return Err(Error::InvalidInput(format!("bad prime {p} does not divide {conductor}")));
            }
            if !(-1..=1).contains(&ap) {
                return Err(Error::InvalidInput(format!("bad-prime coefficient a_{p} = {ap} not in -1..=1")));
            }
            map.insert(p, ap);
        }
        let f = crate::arith::factorize(conductor)?;
        for p in f.primes() {
            if !map.contains_key(&p) {
                return Err(Error::InvalidInput(format!("missing bad-prime coefficient for {p}")));
            }
        }
        let curve = EllipticCurve {
            label: label.to_string(),
            a,
            conductor,
            root_number,
            bad: map,
            cache: None,
            dense: RwLock::new(Arc::new(Vec::new())),
        };
        let disc = curve.discriminant();
        if disc == 0 {
            return Err(Error::SingularCurve(format!("{label} has zero discriminant")));
        }
        let df = crate::arith::factorize(disc.unsigned_abs().min(crate::arith::FACTOR_MAX as u128) as u64)?;
        for p in f.primes() {
            if disc % p as i128 != 0 {
                return Err(Error::SingularCurve(format!("{p} divides the conductor but not the discriminant")));
            }
        }
        for p in df.primes() {
            if conductor % p != 0 {
                return Err(Error::SingularCurve(format!(
                    "{p} divides the discriminant but not the conductor (non-minimal model)"
                )));
            }
        }
        Ok(curve)
    }

    /// Cremona's 11a1: `y^2 + y = x^3 - x^2 - 10x - 20`.
    pub fn c11a1() -> Self {
        EllipticCurve::new("11a1", [0, -1, 1, -10, -20], 11, 1, &[(11, 1)]).expect("11a1 is valid")
    }

    pub fn with_cache(mut self, cache: CoefficientCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn a_invariants(&self) -> [i64; 5] {
        self.a
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn root_number(&self) -> i8 {
        self.root_number
    }

    pub fn bad_primes(&self) -> &BTreeMap<u64, i8> {
        &self.bad
    }

    pub fn discriminant(&self) -> i128 {
        let [a1, a2, a3, a4, a6] = self.a.map(|x| x as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    /// `#E(F_p)` at a prime of good reduction.
    pub fn point_count(&self, p: u64) -> Result<u64> {
        if self.conductor % p == 0 {
            return Err(Error::InvalidInput(format!("{p} is a bad prime; use the bad-prime table")));
        }
        point_count(self.a, p)
    }

    /// Integral `a_p`: `p + 1 - #E(F_p)` at good primes, the table at bad ones.
    pub fn ap(&self, p: u64) -> Result<i64> {
        if let Some(&a) = self.bad.get(&p) {
            return Ok(a as i64);
        }
        Ok(p as i64 + 1 - self.point_count(p)? as i64)
    }

    /// `lambda_E(n)`.
    pub fn curve_lambda(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidInput("coefficients are indexed from 1".into()));
        }
        {
            let d = self.dense.read().expect("coefficient lock poisoned");
            if (n as usize) < d.len() {
                return Ok(d[n as usize]);
            }
        }
        let f = crate::arith::factorize(n)?;
        let mut v = 1.0;
        for &(p, e) in &f.factors {
            v *= self.lambda_prime_power(p, e)?;
        }
        Ok(v)
    }

    /// Checks the supplied bad-prime coefficients against `p + 1 - #E~(F_p)`
    /// on the (singular) reduction of this model.
    pub fn verify_bad_primes(&self) -> Result<()> {
        for (&p, &ap) in &self.bad {
            let got = p as i64 + 1 - point_count(self.a, p)? as i64;
            if got != ap as i64 {
                return Err(Error::InvalidInput(format!(
                    "bad-prime table says a_{p} = {ap}, reduction count gives {got}"
                )));
            }
        }
        Ok(())
    }

    fn compute_dense(&self, limit: usize) -> Result<Vec<f64>> {
        let sieve = Sieve::new(limit.max(2));
        let primes: Vec<u64> = sieve.primes().iter().copied().filter(|&p| p as usize <= limit).collect();
        let aps: Vec<i64> = primes
            .par_iter()
            .map_init(Vec::new, |buf, &p| match self.bad.get(&p) {
                Some(&a) => a as i64,
                None => p as i64 + 1 - count_with(self.a, p, buf) as i64,
            })
            .collect();
        let mut lam = vec![0.0; limit + 1];
        for (&p, &a) in primes.iter().zip(&aps) {
            lam[p as usize] = a as f64 / (p as f64).sqrt();
        }
        assemble(&sieve, limit, |p, j| local_powers(lam[p as usize], self.bad.contains_key(&p), j))
    }

    /// Dense `lambda_E(n)` for `n <= end`, through the cache when attached.
    pub fn build_block(&self, end: usize) -> Result<Arc<Vec<f64>>> {
        self.coefficients(end)
    }
}

impl HeckeSource for EllipticCurve {
    fn id(&self) -> String {
        let bad: Vec<String> = self.bad.iter().map(|(p, a)| format!("{p}:{a}")).collect();
        format!(
            "curve:{}:{:?}:N{}:eps{}:bad[{}]:lambda",
            self.label,
            self.a,
            self.conductor,
            self.root_number,
            bad.join(",")
        )
    }

    fn weight(&self) -> u32 {
        2
    }

    fn level(&self) -> u64 {
        self.conductor
    }

    fn lambda_p(&self, p: u64) -> Result<f64> {
        Ok(self.ap(p)? as f64 / (p as f64).sqrt())
    }

    fn coefficients(&self, limit: usize) -> Result<Arc<Vec<f64>>> {
        {
            let d = self.dense.read().expect("coefficient lock poisoned");
            if d.len() > limit {
                return Ok(d.clone());
            }
        }
        let target = limit.max(1024);
        let id = self.id();
        let mut block = None;
        if let Some(cache) = &self.cache {
            // Blocks start at index 1; index 0 is a placeholder.
            if let CacheLookup::Hit(v) = cache.load(&id, 1, target as u64)? {
                block = Some(std::iter::once(0.0).chain(v).collect());
            }
        }
        let block = match block {
            Some(v) => v,
            None => {
                let v = self.compute_dense(target)?;
                if let Some(cache) = &self.cache {
                    cache.store(&id, 1, &v[1..])?;
                }
                v
            }
        };
        let block = Arc::new(block);
        let mut d = self.dense.write().expect("coefficient lock poisoned");
        if d.len() <= target {
            *d = block;
        }
        Ok(d.clone())
    }
}
