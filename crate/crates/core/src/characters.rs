//! Dirichlet characters mod q as exponent vectors on unit-group generators.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Serialize, Serializer};

use crate::arith::{euler_phi, factorize, gcd_u64, mobius};
use crate::error::{Error, Result};
use crate::C64;

const NOT_UNIT: u32 = u32::MAX;

#[derive(Debug)]
struct Generator {
    /// Modulus of the prime-power component this generator lives in.
    comp_modulus: u64,
    prime: u64,
    /// Order of the generator in the unit group.
    order: u32,
    /// Discrete log of every residue mod `comp_modulus` (NOT_UNIT for non-units).
    dlog: Vec<u32>,
}

/// Shared discrete-log tables for one modulus.
#[derive(Debug)]
pub struct UnitGroup {
    modulus: u64,
    gens: Vec<Generator>,
    /// Exponent of the group: lcm of generator orders.
    exponent: u32,
    roots: Vec<C64>,
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd_u64(a, b) * b
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

fn primitive_root_prime_power(p: u64, e: u32) -> u64 {
    let rs: Vec<u64> = factorize(p - 1).expect("p >= 3").primes().collect();
    let mut g = 2;
    while rs.iter().any(|&r| pow_mod(g, (p - 1) / r, p) == 1) {
        g += 1;
    }
    if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    g
}

fn cyclic_dlog(m: u64, g: u64, order: u64) -> Vec<u32> {
    let mut dlog = vec![NOT_UNIT; m as usize];
    let mut x = 1 % m;
    for k in 0..order {
        dlog[x as usize] = k as u32;
        x = x * g % m;
    }
    dlog
}

impl UnitGroup {
    fn build(q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("modulus must be positive".into()));
        }
        let mut gens = Vec::new();
        for (p, e) in factorize(q)?.factors {
            let m = p.pow(e);
            if p == 2 {
                if e == 2 {
                    gens.push(Generator {
                        comp_modulus: 4,
                        prime: 2,
                        order: 2,
                        dlog: vec![NOT_UNIT, 0, NOT_UNIT, 1],
                    });
                } else if e >= 3 {
                    let o5 = m / 4;
                    let mut sign = vec![NOT_UNIT; m as usize];
                    let mut five = vec![NOT_UNIT; m as usize];
                    let mut x = 1u64;
                    for a in 0..o5 {
                        sign[x as usize] = 0;
                        five[x as usize] = a as u32;
                        sign[(m - x) as usize] = 1;
                        five[(m - x) as usize] = a as u32;
                        x = x * 5 % m;
                    }
                    gens.push(Generator { comp_modulus: m, prime: 2, order: 2, dlog: sign });
                    gens.push(Generator {
                        comp_modulus: m,
                        prime: 2,
                        order: o5 as u32,
                        dlog: five,
                    });
                }
            } else {
                let phi = m / p * (p - 1);
                let g = primitive_root_prime_power(p, e);
                gens.push(Generator {
                    comp_modulus: m,
                    prime: p,
                    order: phi as u32,
                    dlog: cyclic_dlog(m, g, phi),
                });
            }
        }
        let exponent = gens.iter().fold(1u64, |acc, g| lcm(acc, g.order as u64)) as u32;
        let roots = (0..exponent)
            .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / exponent as f64))
            .collect();
        Ok(UnitGroup { modulus: q, gens, exponent, roots })
    }

    /// Cached tables for modulus `q`.
    pub fn get(q: u64) -> Result<Arc<UnitGroup>> {
        static CACHE: OnceLock<RwLock<HashMap<u64, Arc<UnitGroup>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(g) = cache.read().expect("cache poisoned").get(&q) {
            return Ok(g.clone());
        }
        let g = Arc::new(UnitGroup::build(q)?);
        let mut w = cache.write().expect("cache poisoned");
        // Keep the cache bounded; tables are cheap to rebuild.
        if w.len() > 4096 {
            w.clear();
        }
        Ok(w.entry(q).or_insert(g).clone())
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator_orders(&self) -> Vec<u32> {
        self.gens.iter().map(|g| g.order).collect()
    }

    fn conductor_and_parity(&self, exps: &[u32]) -> (u64, bool) {
        let mut cond = 1u64;
        let mut odd = false;
        let mut i = 0;
        while i < self.gens.len() {
            let g = &self.gens[i];
            if g.prime == 2 {
                let b = exps[i];
                odd ^= b == 1;
                if g.comp_modulus == 4 {
                    if b == 1 {
                        cond *= 4;
                    }
                    i += 1;
                } else {
                    let g5 = &self.gens[i + 1];
                    let c = exps[i + 1] as u64;
                    let o5 = g5.order as u64;
                    let oc = o5 / gcd_u64(c, o5);
                    if oc == 1 {
                        if b == 1 {
                            cond *= 4;
                        }
                    } else {
                        cond *= 1 << (oc.trailing_zeros() + 2);
                    }
                    i += 2;
                }
            } else {
                let a = exps[i] as u64;
                let o = g.order as u64;
                let ord = o / gcd_u64(a, o);
                if ord > 1 {
                    let mut v = 0;
                    let mut t = ord;
                    while t % g.prime == 0 {
                        t /= g.prime;
                        v += 1;
                    }
                    cond *= g.prime.pow(1 + v);
                }
                // -1 is g^{order/2}
                odd ^= a % 2 == 1;
                i += 1;
            }
        }
        (cond, !odd)
    }

    fn index(&self, exps: &[u32], n: u64) -> u32 {
        let mut idx = 0u64;
        let l = self.exponent as u64;
        for (g, &a) in self.gens.iter().zip(exps) {
            let d = g.dlog[(n % g.comp_modulus) as usize];
            if d == NOT_UNIT {
                return NOT_UNIT;
            }
            idx += a as u64 * d as u64 % g.order as u64 * (l / g.order as u64);
        }
        (idx % l) as u32
    }
}

/// A Dirichlet character mod q.
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    exponents: Vec<u32>,
    conductor: u64,
    even: bool,
}

impl std::fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletCharacter")
            .field("modulus", &self.modulus())
            .field("exponents", &self.exponents)
            .field("conductor", &self.conductor)
            .field("even", &self.even)
            .finish()
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus() && self.exponents == other.exponents
    }
}

impl Serialize for DirichletCharacter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DirichletCharacter", 4)?;
        st.serialize_field("modulus", &self.modulus())?;
        st.serialize_field("exponents", &self.exponents)?;
        st.serialize_field("conductor", &self.conductor)?;
        st.serialize_field("even", &self.even)?;
        st.end()
    }
}

impl DirichletCharacter {
    pub fn new(q: u64, exponents: Vec<u32>) -> Result<Self> {
        let group = UnitGroup::get(q)?;
        if exponents.len() != group.gens.len()
            || exponents.iter().zip(&group.gens).any(|(&a, g)| a >= g.order)
        {
            return Err(Error::InvalidInput(format!(
                "exponent vector {exponents:?} does not fit generator orders {:?}",
                group.generator_orders()
            )));
        }
        Ok(Self::from_parts(group, exponents))
    }

    fn from_parts(group: Arc<UnitGroup>, exponents: Vec<u32>) -> Self {
        let (conductor, even) = group.conductor_and_parity(&exponents);
        DirichletCharacter { group, exponents, conductor, even }
    }

    pub fn trivial() -> Self {
        Self::new(1, Vec::new()).expect("modulus 1")
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus()
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&a| a == 0)
    }

    /// Order of the character as an element of the dual group.
    pub fn order(&self) -> u64 {
        self.group
            .gens
            .iter()
            .zip(&self.exponents)
            .fold(1, |acc, (g, &a)| lcm(acc, g.order as u64 / gcd_u64(a as u64, g.order as u64)))
    }

    /// Is `chi` real-valued (order at most 2)?
    pub fn is_real(&self) -> bool {
        self.order() <= 2
    }

    pub fn conj(&self) -> Self {
        let exps = self
            .exponents
            .iter()
            .zip(&self.group.gens)
            .map(|(&a, g)| (g.order - a) % g.order)
            .collect();
        DirichletCharacter { group: self.group.clone(), exponents: exps, ..*self }
    }

    pub fn eval(&self, n: i64) -> C64 {
        let q = self.modulus() as i64;
        let r = n.rem_euclid(q) as u64;
        match self.group.index(&self.exponents, r) {
            NOT_UNIT => C64::new(0.0, 0.0),
            j => self.group.roots[j as usize],
        }
    }

    /// `chi(n)` for `n = 0..q`.
    pub fn values(&self) -> Vec<C64> {
        (0..self.modulus()).map(|n| self.eval(n as i64)).collect()
    }

    pub fn gauss_sum(&self) -> Result<C64> {
        if !self.is_primitive() {
            return Err(Error::NotPrimitive { modulus: self.modulus(), conductor: self.conductor });
        }
        let q = self.modulus();
        Ok((1..=q)
            .map(|a| self.eval(a as i64) * C64::from_polar(1.0, 2.0 * PI * a as f64 / q as f64))
            .sum())
    }

    /// `eps(chi) = tau(chi) / (i^a sqrt q)`, `a = 0` for even and `1` for odd characters.
    pub fn root_number(&self) -> Result<C64> {
        let tau = self.gauss_sum()?;
        let eps = tau / (self.modulus() as f64).sqrt();
        Ok(if self.even { eps } else { eps * C64::new(0.0, -1.0) })
    }
}

/// All `phi(q)` characters mod `q` in lexicographic exponent order.
pub fn character_group(q: u64) -> Result<Vec<DirichletCharacter>> {
    let group = UnitGroup::get(q)?;
    let orders = group.generator_orders();
    let mut out = Vec::with_capacity(euler_phi(q)? as usize);
    let mut exps = vec![0u32; orders.len()];
    loop {
        out.push(DirichletCharacter::from_parts(group.clone(), exps.clone()));
        // Mixed-radix increment, last coordinate fastest.
        let mut i = orders.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            exps[i] += 1;
            if exps[i] < orders[i] {
                break;
            }
            exps[i] = 0;
        }
    }
}

/// Even primitive characters mod `q`, lexicographic order.
pub fn enumerate_even_primitive(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(character_group(q)?.into_iter().filter(|c| c.is_primitive() && c.is_even()).collect())
}

/// `(1/2) sum_{d | q} mu(d) phi(q/d)`.
pub fn even_primitive_count_approx(q: u64) -> Result<f64> {
    let divs = factorize(q)?.divisors();
    let mut s = 0i64;
    for d in divs {
        s += mobius(d)? as i64 * euler_phi(q / d)? as i64;
    }
    Ok(0.5 * s as f64)
}

/// Exact number of even primitive characters mod `q`, from per-component counts.
pub fn count_even_primitive(q: u64) -> Result<u64> {
    // (even, odd) primitive counts per prime-power component.
    let mut even = 1u64;
    let mut odd = 0u64;
    for (p, e) in factorize(q)?.factors {
        let (ce, co) = if p == 2 {
            match e {
                1 => (0, 0),
                2 => (0, 1),
                _ => {
                    let n = 1u64 << (e - 3);
                    (n, n)
                }
            }
        } else {
            // primitive characters on a cyclic group of order phi(p^e): exponents
            // whose order is not coprime-to-p-free of full p-power (or > 1 when e = 1).
            let phi = p.pow(e - 1) * (p - 1);
            let total_prim = if e == 1 { p - 2 } else { phi - p.pow(e - 2) * (p - 1) };
            // Exactly half of the primitive exponents are even when p^e > 3.
            let ev = if e == 1 { (p - 3) / 2 } else { total_prim / 2 };
            (ev, total_prim - ev)
        };
        (even, odd) = (even * ce + odd * co, even * co + odd * ce);
    }
    Ok(even)
}
