//! Per-member products of L-values, shared by the moment sums and the
//! multiple Dirichlet series.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{fundamental_discriminants_in, FundamentalDiscriminant};
use crate::characters::enumerate_even_primitive;
use crate::error::{Error, Result};
use crate::lvalues::{AfeOptions, CharacterEngine, TwistEngine, TwistFamily};
use crate::predict::{Family, FamilyKind, ShiftSet, Twist};
use crate::specialfn::TestFunction;
use crate::C64;

/// A family member (`d`, or the modulus `q` for the unitary family) and its
/// twisted L-value product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemberValue {
    pub member: u64,
    pub value: C64,
}

#[derive(Debug)]
enum Engine {
    Twist(TwistEngine),
    Character(CharacterEngine),
}

/// Evaluates `chi_d(M) prod_j L(s_j, member_d)` or, for the unitary family,
/// `sum_chi conj chi(M) chi(N) prod_j L(s_j, chi) prod_h L(z_h, conj chi)`
/// over the even primitive characters of modulus `q`.
#[derive(Debug)]
pub struct MemberSource {
    kind: FamilyKind,
    twist: Twist,
    level: u64,
    max_member: u64,
    engine: Option<Engine>,
}

impl MemberSource {
    pub fn new(family: &Family, shifts: &ShiftSet, twist: Twist, max_member: u64, opts: AfeOptions) -> Result<Self> {
        let kind = family.kind();
        if (kind == FamilyKind::Unitary) == shifts.z.is_empty() {
            return Err(Error::InvalidInput("z-shifts are required for, and only for, the unitary family".into()));
        }
        if kind != FamilyKind::Unitary && twist.n != 1 {
            return Err(Error::InvalidInput("the second twist integer only applies to the unitary family".into()));
        }
        let level = family.level();
        let engine = if max_member == 0 {
            None
        } else {
            Some(match family {
                Family::Unitary => Engine::Character(CharacterEngine::new(&shifts.s, &shifts.z, max_member, opts)?),
                Family::Symplectic => {
                    Engine::Twist(TwistEngine::new(TwistFamily::Quadratic, &shifts.s, max_member, opts)?)
                }
                Family::Orthogonal(f) => {
                    Engine::Twist(TwistEngine::new(TwistFamily::Form(f.clone()), &shifts.s, max_member, opts)?)
                }
                Family::Elliptic(e) => {
                    Engine::Twist(TwistEngine::new(TwistFamily::Curve(e.clone()), &shifts.s, max_member, opts)?)
                }
            })
        };
        Ok(MemberSource { kind, twist, level, max_member, engine })
    }

    pub fn max_member(&self) -> u64 {
        self.max_member
    }

    /// Members in `[lo, hi]`, ascending.
    pub fn members_in(&self, lo: u64, hi: u64) -> Vec<u64> {
        let hi = hi.min(self.max_member);
        if hi < lo.max(1) {
            return Vec::new();
        }
        match self.kind {
            FamilyKind::Unitary => (lo.max(1)..=hi).collect(),
            _ => fundamental_discriminants_in(lo, hi, self.level).into_iter().map(|d| d.get()).collect(),
        }
    }

    pub fn value(&self, member: u64) -> Result<C64> {
        if member == 0 || member > self.max_member {
            return Err(Error::InvalidInput(format!("member {member} outside [1, {}]", self.max_member)));
        }
        match self.engine.as_ref().expect("non-empty range") {
            Engine::Twist(e) => {
                let d = FundamentalDiscriminant::new(member)?;
                let chi_m = d.chi(self.twist.m as i64);
                if chi_m == 0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let l = e.eval(d)?;
                Ok(l.iter().product::<C64>() * chi_m as f64)
            }
            Engine::Character(e) => {
                let mut total = C64::new(0.0, 0.0);
                for chi in enumerate_even_primitive(member)? {
                    let tw = chi.eval(self.twist.m as i64).conj() * chi.eval(self.twist.n as i64);
                    if tw.norm() == 0.0 {
                        continue;
                    }
                    let (a, b) = e.eval(&chi)?;
                    total += tw * a.iter().product::<C64>() * b.iter().product::<C64>();
                }
                Ok(total)
            }
        }
    }

    /// Values in member order; the work is spread over the rayon pool but the
    /// output does not depend on the thread count.
    pub fn values(&self, members: &[u64]) -> Result<Vec<MemberValue>> {
        members
            .par_iter()
            .map(|&m| Ok(MemberValue { member: m, value: self.value(m)? }))
            .collect::<Vec<Result<MemberValue>>>()
            .into_iter()
            .collect()
    }

    /// Members with `member / scale` in the support of `g`.
    pub fn support_members(&self, scale: f64, g: &TestFunction) -> Vec<u64> {
        let (a, b) = g.support();
        let lo = (a * scale).ceil().max(1.0) as u64;
        let hi = (b * scale).floor() as u64;
        self.members_in(lo, hi)
    }

    pub fn support_values(&self, scale: f64, g: &TestFunction) -> Result<Vec<MemberValue>> {
        self.values(&self.support_members(scale, g))
    }

    /// `sum g(member / scale) value`, summed in member order.
    pub fn weighted_sum(values: &[MemberValue], scale: f64, g: &TestFunction) -> C64 {
        values.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + v.value * g.eval(v.member as f64 / scale))
    }

    pub fn moment(&self, scale: f64, g: &TestFunction) -> Result<C64> {
        Ok(Self::weighted_sum(&self.support_values(scale, g)?, scale, g))
    }
}
