//! Exact bookkeeping for prediction terms: affine forms in the shifts with
//! rational coefficients, chi-factor lists and arithmetic-factor references.

use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::specialfn::ChiFactorKind;
use crate::{C64, Q64};

/// `c + sum_j a_j s_j + sum_h b_h z_h`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Affine {
    pub constant: Q64,
    pub s: Vec<Q64>,
    pub z: Vec<Q64>,
}

/// A shift variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    S(usize),
    Z(usize),
}

impl Affine {
    pub fn constant(k: usize, kz: usize, c: Q64) -> Self {
        Affine { constant: c, s: vec![Q64::zero(); k], z: vec![Q64::zero(); kz] }
    }

    pub fn int(k: usize, kz: usize, c: i64) -> Self {
        Self::constant(k, kz, Q64::from_integer(c))
    }

    pub fn var(k: usize, kz: usize, v: Var) -> Self {
        let mut a = Self::int(k, kz, 0);
        match v {
            Var::S(j) => a.s[j] = Q64::one(),
            Var::Z(h) => a.z[h] = Q64::one(),
        }
        a
    }

    pub fn add(&self, o: &Affine) -> Affine {
        Affine {
            constant: self.constant + o.constant,
            s: self.s.iter().zip(&o.s).map(|(a, b)| a + b).collect(),
            z: self.z.iter().zip(&o.z).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: Q64) -> Affine {
        Affine {
            constant: self.constant * c,
            s: self.s.iter().map(|a| a * c).collect(),
            z: self.z.iter().map(|a| a * c).collect(),
        }
    }

    pub fn sub(&self, o: &Affine) -> Affine {
        self.add(&o.scale(-Q64::one()))
    }

    /// `1 - self`.
    pub fn reflect(&self) -> Affine {
        Affine::int(self.s.len(), self.z.len(), 1).sub(self)
    }

    pub fn eval(&self, s: &[C64], z: &[C64]) -> C64 {
        let q = |r: &Q64| *r.numer() as f64 / *r.denom() as f64;
        let mut v = C64::new(q(&self.constant), 0.0);
        for (a, x) in self.s.iter().zip(s) {
            v += x * q(a);
        }
        for (a, x) in self.z.iter().zip(z) {
            v += x * q(a);
        }
        v
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let mut push = |c: &Q64, name: Option<String>| {
            if c.is_zero() {
                return;
            }
            let neg = *c < Q64::zero();
            let mag = if neg { -c } else { *c };
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            match name {
                Some(n) if mag.is_one() => out.push_str(&n),
                Some(n) => out.push_str(&format!("{mag}*{n}")),
                None => out.push_str(&mag.to_string()),
            }
        };
        push(&self.constant, None);
        for (j, c) in self.s.iter().enumerate() {
            push(c, Some(format!("s{}", j + 1)));
        }
        for (h, c) in self.z.iter().enumerate() {
            push(c, Some(format!("z{}", h + 1)));
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)
    }
}

/// One chi-factor `X(arg)` of a given kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChiTerm {
    pub kind: ChiFactorKind,
    pub arg: Affine,
}

/// Which arithmetic factor a term carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    B,
    T,
    H,
}

/// Reference to an arithmetic factor at symbolic arguments.
///
/// The first twist index is `m * level^level_power`; `n` is the second index
/// of `B` (1 otherwise).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorRef {
    pub kind: FactorKind,
    pub m: u64,
    pub n: u64,
    pub level_power: u32,
    pub args: Vec<Affine>,
    pub dual_args: Vec<Affine>,
}

impl FactorRef {
    /// Sorted argument multisets, so permuted inputs compare equal.
    pub fn normalized(mut self) -> Self {
        self.args.sort();
        self.dual_args.sort();
        self
    }

    /// Twist index with `level^2` removed; the factor only sees the square class.
    pub fn effective_m(&self, level: u64) -> u64 {
        self.m * if self.level_power % 2 == 1 { level } else { 1 }
    }
}

/// A prediction term before any numbers are plugged in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolicTerm {
    pub j_mask: u32,
    pub h_mask: u32,
    /// Exponent of the scale; also the argument of the Mellin transform.
    pub exponent: Affine,
    pub chi: Vec<ChiTerm>,
    pub factor: FactorRef,
}

impl SymbolicTerm {
    /// Canonical form for exact comparison: sorted chi list and factor arguments.
    pub fn normalized(mut self) -> Self {
        self.chi.sort_by(|a, b| a.kind.label().cmp(&b.kind.label()).then_with(|| a.arg.cmp(&b.arg)));
        self.factor = self.factor.normalized();
        self
    }
}

/// Members of a bit mask in increasing order.
pub fn mask_members(mask: u32, k: usize) -> Vec<usize> {
    (0..k).filter(|&j| mask & (1 << j) != 0).collect()
}
