//! The arithmetic factors `B_{M,N}`, `T_M` and `H_{f,M}` / `H_{E,M}`.
//!
//! Each factor is an Euler product. The part that diverges near the central
//! point is a product of `zeta` and `L(., sym^2)` values; it is divided out
//! prime by prime and restored through the analytically continued L-values,
//! so the factors make sense wherever those L-values do. Truncated Dirichlet
//! sums in the region of absolute convergence are kept as independent oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::arith::{gcd_u64, primes_up_to, Sieve};
use crate::coeffs::HeckeSource;
use crate::error::{Error, Result};
use crate::lvalues::LFunction;
use crate::specialfn::zeta;
use crate::C64;

/// A factor value with the estimated size of what the truncation left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorValue {
    pub value: C64,
    /// Estimated absolute error from truncation.
    pub tail: f64,
    /// Largest prime or summation index used.
    pub truncation: u64,
    /// False when the truncated product is outside its region of absolute
    /// convergence; `tail` is then at least `|value|`.
    pub converged: bool,
}

/// Truncation of the Euler products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerOptions {
    pub prime_limit: u64,
}

impl Default for EulerOptions {
    fn default() -> Self {
        EulerOptions { prime_limit: 1 << 18 }
    }
}

/// Margin required by the truncated-sum oracles.
pub const DIRECT_MARGIN: f64 = 0.05;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// `p^{-s}`.
fn pw(p: u64, s: C64) -> C64 {
    (-s * (p as f64).ln()).exp()
}

/// `prod_{p <= P} r_p` with a geometric extrapolation of the tail from the
/// last two dyadic chunks of `ln r_p`.
fn residual_product(primes: &[u64], mut ratio: impl FnMut(u64) -> C64) -> (C64, f64) {
    let limit = *primes.last().unwrap_or(&2);
    let (mut total, mut s1, mut s2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for &p in primes {
        let l = ratio(p).ln();
        total += l;
        if 4 * p > limit && 2 * p <= limit {
            s1 += l;
        } else if 2 * p > limit {
            s2 += l;
        }
    }
    let rho = if s1.norm() > 0.0 { s2 / s1 } else { C64::new(1.0, 0.0) };
    let (corr, bound) = if rho.norm() < 0.9 {
        let c = s2 * rho / (1.0 - rho);
        (c, c.norm().max(1e-16))
    } else {
        (C64::new(0.0, 0.0), 10.0 * s2.norm())
    };
    ((total + corr).exp(), bound)
}

fn check_shifts(s: &[C64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty shift set".into()));
    }
    if s.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::InvalidInput("non-finite shift".into()));
    }
    Ok(())
}

/// The local series need every argument in `Re > 0`.
fn check_euler_region(factor: &'static str, args: &[C64]) -> Result<()> {
    for a in args {
        if a.re <= 0.0 {
            return Err(Error::OutOfRegion {
                factor,
                detail: format!("Re {a} <= 0; the local series diverge"),
            });
        }
    }
    Ok(())
}

fn min_re(args: &[C64]) -> f64 {
    args.iter().map(|a| a.re).fold(f64::INFINITY, f64::min)
}

/// After extraction the residual local factors are `1 + O(p^{-1-delta})` plus
/// degree-4 monomials; these need real exponent sum above 1.
fn finish(value: C64, tail: f64, primes: &[u64], degree4: Option<f64>) -> FactorValue {
    let converged = degree4.map_or(true, |d| d > 1.0);
    let mut tail = tail * value.norm();
    if !converged {
        tail = tail.max(value.norm());
    }
    FactorValue { value, tail, truncation: *primes.last().unwrap_or(&2), converged }
}

fn positive(m: u64, what: &str) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput(format!("{what} must be a positive integer")));
    }
    Ok(())
}

/// `1 / (2 zeta(2))`.
pub fn half_inv_zeta2() -> f64 {
    3.0 / (PI * PI)
}

/// `sum_{e1+..+ek = i} prod x_a^{e_a}` for `0 <= i <= max`.
fn complete_homogeneous(x: &[C64], max: usize) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); max + 1];
    h[0] = one();
    for &xa in x {
        for i in 1..=max {
            let prev = h[i - 1];
            h[i] += xa * prev;
        }
    }
    h
}

/// `B_{M,N}(S, Z)`.
pub fn factor_b(m: u64, n: u64, s: &[C64], z: &[C64], opts: &EulerOptions) -> Result<FactorValue> {
    check_shifts(s)?;
    check_shifts(z)?;
    positive(m, "M")?;
    positive(n, "N")?;
    check_euler_region("B", s)?;
    check_euler_region("B", z)?;
    let mut lead = one();
    for &a in s {
        for &b in z {
            lead *= zeta(a + b)?;
        }
    }
    let primes = primes_up_to(opts.prime_limit.max(m).max(n).max(16));
    let (res, tail) = residual_product(&primes, |p| {
        let pf = p as f64;
        let x: Vec<C64> = s.iter().map(|&a| pw(p, a)).collect();
        let y: Vec<C64> = z.iter().map(|&b| pw(p, b)).collect();
        let rmax = x.iter().chain(&y).map(|v| v.norm()).fold(0.0, f64::max);
        // h_i(x) h_j(y) decays like (i^{k-1} rmax^i)^2.
        let terms = if rmax <= 0.0 { 2 } else { ((40.0 / -rmax.ln()) as usize + 8).min(4000) };
        let mu = valuation(m, p) as usize;
        let nu = valuation(n, p) as usize;
        let hx = complete_homogeneous(&x, terms + mu);
        let hy = complete_homogeneous(&y, terms + nu);
        let c = (1.0 - 1.0 / pf) / (1.0 - 1.0 / (pf * pf)).powi(2);
        let divides = mu + nu > 0;
        let mut local = C64::new(0.0, 0.0);
        // N n = M m: v(n) = i, v(m) = j = i + nu - mu.
        for i in 0..=terms + mu {
            let Some(j) = (i + nu).checked_sub(mu) else { continue };
            if j >= hy.len() {
                break;
            }
            let w = if divides || i + j > 0 { c } else { 1.0 };
            local += hx[i] * hy[j] * w;
        }
        let mut ratio = local;
        for xa in &x {
            for yb in &y {
                ratio *= one() - xa * yb;
            }
        }
        ratio
    });
    let value = lead * res * (half_inv_zeta2() * half_inv_zeta2() * 2.0);
    let degree4 = (s.len() > 1 || z.len() > 1).then(|| 2.0 * min_re(s) + 2.0 * min_re(z));
    Ok(finish(value, tail, &primes, degree4))
}

/// Parity-restricted local sum: tuples `(e_1..e_k)` with `mu + sum e` even,
/// weight `w` except the empty tuple with `mu` even, which gets `w0`.
fn parity_local(f_plus: &[C64], f_minus: &[C64], mu: u32, w: f64, w0: f64) -> C64 {
    let pp: C64 = f_plus.iter().product();
    let pm: C64 = f_minus.iter().product();
    let sign = if mu % 2 == 0 { 1.0 } else { -1.0 };
    let par = (pp + pm * sign) * 0.5;
    let mut local = par * w;
    if mu % 2 == 0 {
        local += w0 - w;
    }
    local
}

/// `T_M(S)`.
pub fn factor_t(m: u64, s: &[C64], opts: &EulerOptions) -> Result<FactorValue> {
    check_shifts(s)?;
    positive(m, "M")?;
    check_euler_region("T", s)?;
    let k = s.len();
    let mut lead = one();
    for a in 0..k {
        for b in a..k {
            lead *= zeta(s[a] + s[b])?;
        }
    }
    let primes = primes_up_to(opts.prime_limit.max(m).max(16));
    let (res, tail) = residual_product(&primes, |p| {
        let pf = p as f64;
        let x: Vec<C64> = s.iter().map(|&a| pw(p, a)).collect();
        let fp: Vec<C64> = x.iter().map(|xa| one() / (one() - xa)).collect();
        let fm: Vec<C64> = x.iter().map(|xa| one() / (one() + xa)).collect();
        let mu = valuation(m, p);
        let w = pf / (pf + 1.0);
        let w0 = if mu > 0 { w } else { 1.0 };
        let mut ratio = parity_local(&fp, &fm, mu, w, w0);
        for a in 0..k {
            for b in a..k {
                ratio *= one() - x[a] * x[b];
            }
        }
        ratio
    });
    let value = lead * res * half_inv_zeta2();
    Ok(finish(value, tail, &primes, (k > 1).then(|| 4.0 * min_re(s))))
}

/// Local factor of `L(s, sym^2)` at `p` in the variable `y = p^{-s}`.
fn sym2_local(l: f64, bad: bool, y: C64) -> C64 {
    if bad {
        one() / (one() - y * (l * l))
    } else {
        let a = l * l - 1.0;
        one() / (one() - y * a + y * y * a - y * y * y)
    }
}

/// `H_{f,M}(S)` for a level-1 form or `H_{E,M}(S)` for a curve: the source's
/// level `N` enters as `a(M N n_1 ... n_k)`.
pub fn factor_h(src: &Arc<dyn HeckeSource>, m: u64, s: &[C64], opts: &EulerOptions) -> Result<FactorValue> {
    check_shifts(s)?;
    positive(m, "M")?;
    check_euler_region("H", s)?;
    let k = s.len();
    let level = src.level();
    let sym2 = LFunction::Sym2(src.clone());
    let mut lead = one();
    for a in 0..k {
        lead *= sym2.eval(s[a] * 2.0)?;
        for b in a + 1..k {
            lead *= zeta(s[a] + s[b])? * sym2.eval(s[a] + s[b])?;
        }
    }
    let limit = opts.prime_limit.max(m).max(level).max(16);
    let coeffs = src.coefficients(limit as usize)?;
    let primes = primes_up_to(limit);
    let (res, tail) = residual_product(&primes, |p| {
        let pf = p as f64;
        let l = coeffs[p as usize];
        let bad = level % p == 0;
        let x: Vec<C64> = s.iter().map(|&a| pw(p, a)).collect();
        let f = |xa: C64, t: f64| -> C64 {
            if bad {
                one() / (one() - xa * (l * t))
            } else {
                one() / (one() - xa * (l * t) + xa * xa)
            }
        };
        let fp: Vec<C64> = x.iter().map(|&xa| f(xa, 1.0)).collect();
        let fm: Vec<C64> = x.iter().map(|&xa| f(xa, -1.0)).collect();
        let mu = valuation(m, p);
        let w = pf / (pf + 1.0);
        let w0 = if (m * level) % p == 0 { w } else { 1.0 };
        let mut ratio = parity_local(&fp, &fm, mu, w, w0);
        for a in 0..k {
            ratio /= sym2_local(l, bad, x[a] * x[a]);
            for b in a + 1..k {
                let y = x[a] * x[b];
                ratio *= one() - y;
                ratio /= sym2_local(l, bad, y);
            }
        }
        ratio
    });
    let value = lead * res * half_inv_zeta2();
    Ok(finish(value, tail, &primes, Some(4.0 * min_re(s))))
}

fn check_margin(factor: &'static str, pairs: impl Iterator<Item = (C64, C64)>, singles: &[C64]) -> Result<()> {
    for &x in singles {
        if x.re <= 0.5 {
            return Err(Error::OutOfRegion { factor, detail: format!("Re {x} <= 1/2") });
        }
    }
    for (a, b) in pairs {
        if a.re + b.re <= 1.0 + DIRECT_MARGIN {
            return Err(Error::OutOfRegion {
                factor,
                detail: format!("Re({a}) + Re({b}) <= 1 + {DIRECT_MARGIN}"),
            });
        }
    }
    Ok(())
}

/// Exponent-parity and prime-set bookkeeping for `M n_1 ... n_k`.
struct Product {
    odd: Vec<u64>,
    primes: Vec<u64>,
}

impl Product {
    fn of(sieve: &Sieve, m: u64) -> Self {
        let mut out = Product { odd: Vec::new(), primes: Vec::new() };
        if m > 1 {
            let f = crate::arith::factorize(m).expect("small integer");
            for (p, e) in f.factors {
                out.primes.push(p);
                if e % 2 == 1 {
                    out.odd.push(p);
                }
            }
        }
        let _ = sieve;
        out
    }

    fn times(&self, sieve: &Sieve, n: usize) -> Self {
        let mut odd = self.odd.clone();
        let mut primes = self.primes.clone();
        for (p, e) in sieve.factorize(n as u64).factors {
            if !primes.contains(&p) {
                primes.push(p);
            }
            if e % 2 == 1 {
                if let Some(i) = odd.iter().position(|&q| q == p) {
                    odd.swap_remove(i);
                } else {
                    odd.push(p);
                }
            }
        }
        Product { odd, primes }
    }

    fn a(&self, extra: u64) -> f64 {
        let mut v = 1.0;
        for &p in &self.primes {
            v *= p as f64 / (p as f64 + 1.0);
        }
        if extra > 1 {
            for (p, _) in crate::arith::factorize(extra).expect("small integer").factors {
                if !self.primes.contains(&p) {
                    v *= p as f64 / (p as f64 + 1.0);
                }
            }
        }
        v
    }
}

/// Sum over the box `n_i <= trunc` of `term(n, product)` for all tuples.
fn box_sum(
    sieve: &Sieve,
    base: &Product,
    s: &[C64],
    trunc: usize,
    coeff: &dyn Fn(usize) -> f64,
    leaf: &mut dyn FnMut(&Product, C64),
) {
    fn rec(
        sieve: &Sieve,
        prod: &Product,
        s: &[C64],
        trunc: usize,
        coeff: &dyn Fn(usize) -> f64,
        acc: C64,
        leaf: &mut dyn FnMut(&Product, C64),
    ) {
        let Some((&first, rest)) = s.split_first() else {
            leaf(prod, acc);
            return;
        };
        for n in 1..=trunc {
            let c = coeff(n);
            if c == 0.0 {
                continue;
            }
            let next = prod.times(sieve, n);
            let w = acc * c * (-first * (n as f64).ln()).exp();
            rec(sieve, &next, rest, trunc, coeff, w, leaf);
        }
    }
    rec(sieve, base, s, trunc, coeff, one(), leaf);
}

fn direct_square_sum(
    m: u64,
    level: u64,
    s: &[C64],
    trunc: usize,
    coeff: &dyn Fn(usize) -> f64,
) -> C64 {
    let sieve = Sieve::new(trunc.max(2));
    let base = Product::of(&sieve, m);
    let mut total = C64::new(0.0, 0.0);
    box_sum(&sieve, &base, s, trunc, coeff, &mut |prod, w| {
        if prod.odd.is_empty() {
            total += w * prod.a(level);
        }
    });
    total * half_inv_zeta2()
}

fn direct_value(run: impl Fn(usize) -> C64, trunc: usize) -> FactorValue {
    let full = run(trunc);
    let half = run((trunc / 2).max(1));
    FactorValue { value: full, tail: (full - half).norm(), truncation: trunc as u64, converged: true }
}

/// `T_M(S)` as the truncated sum over `n_i <= truncation`.
pub fn factor_t_direct(m: u64, s: &[C64], truncation: usize) -> Result<FactorValue> {
    check_shifts(s)?;
    positive(m, "M")?;
    check_margin("T", pairs_le(s), s)?;
    Ok(direct_value(|t| direct_square_sum(m, 1, s, t, &|_| 1.0), truncation))
}

/// `H_{f,M}(S)` / `H_{E,M}(S)` as a truncated sum.
pub fn factor_h_direct(src: &Arc<dyn HeckeSource>, m: u64, s: &[C64], truncation: usize) -> Result<FactorValue> {
    check_shifts(s)?;
    positive(m, "M")?;
    check_margin("H", pairs_le(s), s)?;
    let c = src.coefficients(truncation.max(1))?;
    Ok(direct_value(|t| direct_square_sum(m, src.level(), s, t, &|n| c[n]), truncation))
}

/// `B_{M,N}(S, Z)` as the truncated sum over `n_i, m_i <= truncation`.
pub fn factor_b_direct(m: u64, n: u64, s: &[C64], z: &[C64], truncation: usize) -> Result<FactorValue> {
    check_shifts(s)?;
    check_shifts(z)?;
    positive(m, "M")?;
    positive(n, "N")?;
    let pairs = s.iter().flat_map(|&a| z.iter().map(move |&b| (a, b)));
    let singles: Vec<C64> = s.iter().chain(z).copied().collect();
    check_margin("B", pairs, &singles)?;
    let run = |trunc: usize| -> C64 {
        let sieve = Sieve::new(trunc.max(2));
        // Group the n-side and m-side products by value.
        let side = |v: &[C64]| -> std::collections::BTreeMap<u64, C64> {
            let mut map = std::collections::BTreeMap::new();
            fn rec(v: &[C64], trunc: usize, prod: u64, acc: C64, map: &mut std::collections::BTreeMap<u64, C64>) {
                let Some((&first, rest)) = v.split_first() else {
                    *map.entry(prod).or_insert(C64::new(0.0, 0.0)) += acc;
                    return;
                };
                for k in 1..=trunc {
                    rec(rest, trunc, prod * k as u64, acc * (-first * (k as f64).ln()).exp(), map);
                }
            }
            rec(v, trunc, 1, one(), &mut map);
            map
        };
        let ns = side(s);
        let ms = side(z);
        let mut total = C64::new(0.0, 0.0);
        let g = gcd_u64(m, n);
        let (m0, n0) = (m / g, n / g);
        for (&nv, &wn) in &ns {
            // N n = M m  <=>  n = m0 t, m = n0 t.
            if nv % m0 != 0 {
                continue;
            }
            let t = nv / m0;
            let Some(&wm) = ms.get(&(n0 * t)) else { continue };
            let all = m * n * nv * n0 * t;
            let mut c = 1.0;
            let f = if all <= sieve.limit() as u64 {
                sieve.factorize(all)
            } else {
                crate::arith::factorize(all).expect("in range")
            };
            for p in f.primes() {
                let pf = p as f64;
                c *= (1.0 - 1.0 / pf) / (1.0 - 1.0 / (pf * pf)).powi(2);
            }
            total += wn * wm * c;
        }
        total * (2.0 * half_inv_zeta2() * half_inv_zeta2())
    };
    Ok(direct_value(run, truncation))
}

fn pairs_le(s: &[C64]) -> impl Iterator<Item = (C64, C64)> + '_ {
    (0..s.len()).flat_map(move |a| (a..s.len()).map(move |b| (s[a], s[b])))
}
