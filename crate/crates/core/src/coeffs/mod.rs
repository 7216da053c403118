//! Normalized Dirichlet coefficients of a level-1 Hecke eigenform and of an
//! elliptic curve, their symmetric squares, and a persistent block cache.

mod cache;
mod curve;
mod form;

use std::sync::Arc;

pub use cache::{CacheEntry, CacheLookup, CoefficientCache, CACHE_MAGIC, CACHE_VERSION};
pub use curve::{point_count, EllipticCurve};
pub use form::{ramanujan_tau, ModularForm, TAU_MAX};

use crate::arith::Sieve;
use crate::error::Result;

/// A family base with multiplicative, Hecke-normalized coefficients.
pub trait HeckeSource: Send + Sync + std::fmt::Debug {
    /// Stable identifier (used for cache keys and reports).
    fn id(&self) -> String;

    /// Weight of the underlying newform (2 for elliptic curves).
    fn weight(&self) -> u32;

    /// Level: 1 for full-level forms, the conductor for curves.
    fn level(&self) -> u64;

    /// `lambda(p)`, normalized so that the Ramanujan bound reads `|lambda(p)| <= 2`.
    fn lambda_p(&self, p: u64) -> Result<f64>;

    /// Dense block `c[n]` for `0 <= n <= limit` (`c[0] = 0`).
    fn coefficients(&self, limit: usize) -> Result<Arc<Vec<f64>>>;

    /// Whether `p` divides the level (degree-one Euler factor).
    fn is_bad(&self, p: u64) -> bool {
        self.level() % p == 0
    }

    /// `lambda(p^j)` from the local Euler factor.
    fn lambda_prime_power(&self, p: u64, j: u32) -> Result<f64> {
        let l = self.lambda_p(p)?;
        Ok(local_powers(l, self.is_bad(p), j as usize)[j as usize])
    }

    /// Conductor of `sym^2`; only squarefree levels (semistable) are supported.
    fn sym2_conductor(&self) -> Result<u64> {
        let f = crate::arith::factorize(self.level())?;
        if !f.is_squarefree() {
            return Err(crate::Error::InvalidInput(format!(
                "symmetric square needs a squarefree level, got {}",
                self.level()
            )));
        }
        Ok(self.level() * self.level())
    }

    /// Dense coefficients of `L(s, sym^2)` up to `limit`.
    fn sym2_coefficients(&self, limit: usize) -> Result<Vec<f64>> {
        let base = self.coefficients(limit)?;
        let sieve = Sieve::new(limit.max(2));
        assemble(&sieve, limit, |p, j| {
            let l = base[p as usize];
            sym2_powers(l, self.is_bad(p), j)
        })
    }
}

/// `lambda(p^j)` for `0 <= j <= max`: Hecke recursion at good primes, powers at bad ones.
pub(crate) fn local_powers(l: f64, bad: bool, max: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(max + 1);
    v.push(1.0);
    for j in 1..=max {
        let next = if bad {
            l * v[j - 1]
        } else if j == 1 {
            l
        } else {
            l * v[j - 1] - v[j - 2]
        };
        v.push(next);
    }
    v
}

/// Coefficients of the local factor of `L(s, sym^2)` at `p`.
///
/// Good `p`: `1 / ((1 - a^2 x)(1 - x)(1 - b^2 x))` with `a + b = lambda`, `ab = 1`.
/// Multiplicative `p`: `1 / (1 - lambda^2 x)`.
pub(crate) fn sym2_powers(l: f64, bad: bool, max: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(max + 1);
    v.push(1.0);
    let a = l * l - 1.0;
    for j in 1..=max {
        let next = if bad {
            l * l * v[j - 1]
        } else {
            let b1 = v[j - 1];
            let b2 = if j >= 2 { v[j - 2] } else { 0.0 };
            let b3 = if j >= 3 { v[j - 3] } else { 0.0 };
            a * b1 - a * b2 + b3
        };
        v.push(next);
    }
    v
}

/// Dense multiplicative assembly `c[n] = prod_{p^j || n} local(p)[j]`.
pub(crate) fn assemble(
    sieve: &Sieve,
    limit: usize,
    mut local: impl FnMut(u64, usize) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let mut c = vec![0.0; limit + 1];
    if limit == 0 {
        return Ok(c);
    }
    c[1] = 1.0;
    for &p in sieve.primes() {
        let p = p as usize;
        if p > limit {
            break;
        }
        let mut max_j = 0;
        let mut q = p;
        while q <= limit {
            max_j += 1;
            match q.checked_mul(p) {
                Some(x) => q = x,
                None => break,
            }
        }
        let pw = local(p as u64, max_j);
        let mut q = p;
        for j in 1..=max_j {
            c[q] = pw[j];
            q = q.saturating_mul(p);
        }
    }
    for n in 2..=limit {
        let p = sieve.spf(n);
        if p == n {
            continue;
        }
        let mut m = n;
        let mut pk = 1;
        while m % p == 0 {
            m /= p;
            pk *= p;
        }
        if m > 1 {
            c[n] = c[pk] * c[m];
        }
    }
    Ok(c)
}
