use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use super::{assemble, local_powers, HeckeSource};
use crate::arith::Sieve;
use crate::error::{Error, Result};

/// Largest `n` for which [`ramanujan_tau`] reconstructs `tau(n)` exactly.
pub const TAU_MAX: usize = 1_000_000;

const P1: u64 = (1 << 61) - 1;
const P2: u64 = (1 << 62) - 57;

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Coefficients of `prod (1 - q^n)^24` modulo `m`, via the recurrence for the
/// eighth power of `eta^3 = sum (-1)^j (2j+1) q^{j(j+1)/2}`.
fn eta24_mod(limit: usize, m: u64) -> Vec<u64> {
    let mut sparse: Vec<(usize, i64)> = Vec::new();
    let mut j = 1usize;
    while j * (j + 1) / 2 <= limit {
        let c = if j % 2 == 0 { 2 * j as i64 + 1 } else { -(2 * j as i64 + 1) };
        sparse.push((j * (j + 1) / 2, c));
        j += 1;
    }
    let mut f = vec![0u64; limit + 1];
    f[0] = 1;
    for n in 1..=limit {
        // n f_n = sum_j p_j (9 j - n) f_{n-j}
        let (mut pos, mut neg) = (0u128, 0u128);
        for &(k, c) in &sparse {
            if k > n {
                break;
            }
            let w = c * (9 * k as i64 - n as i64);
            let term = w.unsigned_abs() as u128 * f[n - k] as u128;
            if w >= 0 {
                pos += term;
            } else {
                neg += term;
            }
        }
        let mm = m as u128;
        let acc = ((pos % mm) + mm - (neg % mm)) % mm;
        let inv = pow_mod(n as u64, m - 2, m);
        f[n] = ((acc * inv as u128) % mm) as u64;
    }
    f
}

/// Exact Ramanujan `tau(n)` for `0 <= n <= limit` (`tau(0) = 0`).
pub fn ramanujan_tau(limit: usize) -> Result<Vec<i128>> {
    if limit > TAU_MAX {
        return Err(Error::InvalidInput(format!("tau limited to n <= {TAU_MAX}, got {limit}")));
    }
    let len = limit.max(1);
    let (a, b) = (eta24_mod(len - 1, P1), eta24_mod(len - 1, P2));
    let inv = pow_mod(P1 % P2, P2 - 2, P2) as u128;
    let modulus = P1 as u128 * P2 as u128;
    let half = modulus / 2;
    let mut tau = vec![0i128; limit + 1];
    for n in 1..=limit {
        let (x1, x2) = (a[n - 1] as u128, b[n - 1] as u128);
        let t = ((x2 + P2 as u128 - x1 % P2 as u128) % P2 as u128) * inv % P2 as u128;
        let x = x1 + P1 as u128 * t;
        tau[n] = if x > half { -((modulus - x) as i128) } else { x as i128 };
    }
    Ok(tau)
}

#[derive(Debug, Clone)]
enum Seed {
    Delta,
    Table(Arc<BTreeMap<u64, f64>>),
}

/// A level-1 Hecke eigenform given by normalized prime coefficients.
#[derive(Debug)]
pub struct ModularForm {
    weight: u32,
    label: String,
    seed: Seed,
    dense: RwLock<Arc<Vec<f64>>>,
}

impl ModularForm {
    /// The discriminant form `Delta` of weight 12.
    pub fn delta() -> Self {
        ModularForm {
            weight: 12,
            label: "delta".into(),
            seed: Seed::Delta,
            dense: RwLock::new(Arc::new(Vec::new())),
        }
    }

    /// A form given by `(p, a(p))` pairs; `normalized = false` means the
    /// classical integral coefficients, divided here by `p^{(weight-1)/2}`.
    pub fn from_prime_table(
        weight: u32,
        label: &str,
        table: &[(u64, f64)],
        normalized: bool,
    ) -> Result<Self> {
        if weight < 12 || weight % 2 == 1 {
            return Err(Error::InvalidInput(format!("weight must be even and >= 12, got {weight}")));
        }
        let mut map = BTreeMap::new();
        for &(p, a) in table {
            if !crate::arith::is_prime(p) {
                return Err(Error::InvalidInput(format!("{p} in prime table is not prime")));
            }
            let l = if normalized { a } else { a / (p as f64).powf((weight as f64 - 1.0) / 2.0) };
            if !(l.abs() <= 2.0 + 1e-9) {
                return Err(Error::InvalidInput(format!("a({p}) violates the Deligne bound")));
            }
            map.insert(p, l);
        }
        Ok(ModularForm {
            weight,
            label: label.to_string(),
            seed: Seed::Table(Arc::new(map)),
            dense: RwLock::new(Arc::new(Vec::new())),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `a_f(n)` for a single `n`.
    pub fn hecke_coefficient(&self, n: u64) -> Result<f64> {
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

    fn prime_values(&self, limit: usize, sieve: &Sieve) -> Result<Vec<f64>> {
        let mut at = vec![0.0; limit + 1];
        match &self.seed {
            Seed::Delta => {
                let tau = ramanujan_tau(limit)?;
                for &p in sieve.primes() {
                    if p as usize > limit {
                        break;
                    }
                    at[p as usize] = tau[p as usize] as f64 / (p as f64).powf(5.5);
                }
            }
            Seed::Table(map) => {
                for &p in sieve.primes() {
                    if p as usize > limit {
                        break;
                    }
                    at[p as usize] = *map.get(&p).ok_or_else(|| {
                        Error::MissingCoefficients(format!("{}: no a({p}) in the prime table", self.label))
                    })?;
                }
            }
        }
        Ok(at)
    }
}

impl HeckeSource for ModularForm {
    fn id(&self) -> String {
        format!("form:{}:k{}", self.label, self.weight)
    }

    fn weight(&self) -> u32 {
        self.weight
    }

    fn level(&self) -> u64 {
        1
    }

    fn lambda_p(&self, p: u64) -> Result<f64> {
        {
            let d = self.dense.read().expect("coefficient lock poisoned");
            if (p as usize) < d.len() {
                return Ok(d[p as usize]);
            }
        }
        match &self.seed {
            Seed::Table(map) => map.get(&p).copied().ok_or_else(|| {
                Error::MissingCoefficients(format!("{}: no a({p}) in the prime table", self.label))
            }),
            Seed::Delta => Ok(self.coefficients(p as usize)?[p as usize]),
        }
    }

    fn coefficients(&self, limit: usize) -> Result<Arc<Vec<f64>>> {
        {
            let d = self.dense.read().expect("coefficient lock poisoned");
            if d.len() > limit {
                return Ok(d.clone());
            }
        }
        let target = match self.seed {
            Seed::Delta => (limit.max(1024)).min(TAU_MAX).max(limit),
            Seed::Table(_) => limit,
        };
        let sieve = Sieve::new(target.max(2));
        let at = self.prime_values(target, &sieve)?;
        let c = assemble(&sieve, target, |p, j| local_powers(at[p as usize], false, j))?;
        let c = Arc::new(c);
        let mut d = self.dense.write().expect("coefficient lock poisoned");
        if d.len() <= target {
            *d = c.clone();
        }
        Ok(d.clone())
    }
}
