//! Residues of the transported series, assembled by applying the member
//! functional equation one L-factor at a time.

use serde::Serialize;

use crate::predict::{
    recipe_symbolic, Affine, ChiTerm, FactorKind, FactorRef, Family, FamilyKind, RecipeMode, SymbolicTerm, Twist, Var,
};
use crate::Q64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Chi,
    ConjChi,
}

#[derive(Debug, Clone)]
struct Slot {
    arg: Affine,
    side: Side,
}

/// State of `A(...; w)` after some functional equations: the L-factor
/// arguments, the accumulated chi-factors, `sigma(w) - w`, the power of the
/// root number that survives and the power of `chi_d(N)`.
#[derive(Debug, Clone)]
struct Series {
    slots: Vec<Slot>,
    chi: Vec<ChiTerm>,
    w_shift: Affine,
    eps_power: i32,
    level_power: u32,
}

impl Series {
    fn initial(k: usize, kz: usize) -> Self {
        let mut slots: Vec<Slot> = (0..k).map(|j| Slot { arg: Affine::var(k, kz, Var::S(j)), side: Side::Chi }).collect();
        slots.extend((0..kz).map(|h| Slot { arg: Affine::var(k, kz, Var::Z(h)), side: Side::ConjChi }));
        Series { slots, chi: Vec::new(), w_shift: Affine::int(k, kz, 0), eps_power: 0, level_power: 0 }
    }

    /// `L(a, member) = eps(member) X(a) cond(member)^{1/2 - a} L(1 - a, dual member)`.
    fn apply(&mut self, family: &Family, slot: usize) {
        let kind = family.kind();
        let a = self.slots[slot].arg.clone();
        let (k, kz) = (a.s.len(), a.z.len());
        self.chi.push(ChiTerm { kind: family.chi_kind(), arg: a.clone() });
        let half = Affine::constant(k, kz, Q64::new(1, 2));
        // member^{-w} member^{(1/2 - a) e}: e = 1 for conductor d or q, e = 2 for d^2.
        let step = match kind {
            FamilyKind::Unitary | FamilyKind::Symplectic => a.sub(&half),
            FamilyKind::Orthogonal | FamilyKind::Elliptic => a.sub(&half).scale(Q64::from_integer(2)),
        };
        self.w_shift = self.w_shift.add(&step);
        let s = &mut self.slots[slot];
        s.arg = a.reflect();
        match kind {
            FamilyKind::Unitary => {
                // eps(conj chi) = 1 / eps(chi) for even chi.
                self.eps_power += if s.side == Side::Chi { 1 } else { -1 };
                s.side = if s.side == Side::Chi { Side::ConjChi } else { Side::Chi };
            }
            // Root number eps(E) chi_d(-N): eps(E) sits in X_E, chi_d(-1) = 1.
            FamilyKind::Elliptic => self.level_power += 1,
            // i^k sits in X_f; quadratic characters of positive d are even.
            FamilyKind::Symplectic | FamilyKind::Orthogonal => {}
        }
    }

    /// The pole of the series (`sigma(w) = 1` or `2`) and its residue there.
    fn residue(&self, family: &Family, twist: Twist, j_mask: u32, h_mask: u32) -> SymbolicTerm {
        let kind = family.kind();
        let (k, kz) = (self.w_shift.s.len(), self.w_shift.z.len());
        let base = if kind == FamilyKind::Unitary { 2 } else { 1 };
        let exponent = Affine::int(k, kz, base).sub(&self.w_shift);
        let factor = if kind == FamilyKind::Unitary {
            let pick = |side| self.slots.iter().filter(|s| s.side == side).map(|s| s.arg.clone()).collect();
            FactorRef {
                kind: FactorKind::B,
                m: twist.m,
                n: twist.n,
                level_power: 0,
                args: pick(Side::Chi),
                dual_args: pick(Side::ConjChi),
            }
        } else {
            FactorRef {
                kind: if kind == FamilyKind::Symplectic { FactorKind::T } else { FactorKind::H },
                m: twist.m,
                n: 1,
                level_power: self.level_power,
                args: self.slots.iter().map(|s| s.arg.clone()).collect(),
                dual_args: Vec::new(),
            }
        };
        SymbolicTerm { j_mask, h_mask, exponent, chi: self.chi.clone(), factor }.normalized()
    }
}

/// Residue terms of every transported series whose root numbers cancel, in
/// binary-mask order.
pub fn residue_symbolic(family: &Family, k: usize, twist: Twist) -> Vec<SymbolicTerm> {
    let kz = if family.kind() == FamilyKind::Unitary { k } else { 0 };
    let mut out = Vec::new();
    for jm in 0u32..1 << k {
        for hm in 0u32..1 << kz {
            let mut series = Series::initial(k, kz);
            for j in 0..k {
                if jm & (1 << j) != 0 {
                    series.apply(family, j);
                }
            }
            for h in 0..kz {
                if hm & (1 << h) != 0 {
                    series.apply(family, k + h);
                }
            }
            // A nonzero power of eps(chi) oscillates over the family and has no pole.
            if series.eps_power != 0 {
                continue;
            }
            out.push(series.residue(family, twist, jm, hm));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceRow {
    pub j_mask: u32,
    pub h_mask: u32,
    pub in_recipe: bool,
    pub exponent: bool,
    pub chi: bool,
    pub factor: bool,
    /// Factors agree only after removing `N^2` from the twist index.
    pub factor_up_to_square: bool,
    pub recipe_exponent: Option<String>,
    pub residue_exponent: String,
    pub residue_twist_power: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub family: String,
    pub k: usize,
    pub mode: RecipeMode,
    pub rows: Vec<CorrespondenceRow>,
    /// Every recipe term equals a residue exactly.
    pub recipe_terms_matched: bool,
    /// Residues with no recipe term (the odd `|J|` terms of the unmodified elliptic recipe).
    pub unmatched_residues: Vec<u32>,
}

/// Termwise comparison of recipe terms with transported residues.
pub fn correspondence(family: &Family, k: usize, twist: Twist, mode: RecipeMode) -> CorrespondenceReport {
    let recipe = recipe_symbolic(family, k, twist, mode);
    let residues = residue_symbolic(family, k, twist);
    let mut rows = Vec::new();
    let mut unmatched = Vec::new();
    let mut all = recipe.len() <= residues.len();
    for res in &residues {
        let rec = recipe.iter().find(|t| t.j_mask == res.j_mask && t.h_mask == res.h_mask);
        let (exponent, chi, factor, up_to_sq) = match rec {
            Some(t) => {
                let exact = t.factor == res.factor;
                let mut a = t.factor.clone();
                let mut b = res.factor.clone();
                a.level_power %= 2;
                b.level_power %= 2;
                (t.exponent == res.exponent, t.chi == res.chi, exact, !exact && a == b)
            }
            None => {
                unmatched.push(res.j_mask);
                (false, false, false, false)
            }
        };
        if rec.is_some() {
            all &= exponent && chi && (factor || (mode == RecipeMode::Unmodified && up_to_sq));
        }
        rows.push(CorrespondenceRow {
            j_mask: res.j_mask,
            h_mask: res.h_mask,
            in_recipe: rec.is_some(),
            exponent,
            chi,
            factor,
            factor_up_to_square: up_to_sq,
            recipe_exponent: rec.map(|t| t.exponent.to_string()),
            residue_exponent: res.exponent.to_string(),
            residue_twist_power: res.factor.level_power,
        });
    }
    // Recipe terms without a residue would be a failure of the correspondence.
    for t in &recipe {
        if !residues.iter().any(|r| r.j_mask == t.j_mask && r.h_mask == t.h_mask) {
            all = false;
        }
    }
    CorrespondenceReport {
        family: family.label(),
        k,
        mode,
        rows,
        recipe_terms_matched: all,
        unmatched_residues: unmatched,
    }
}
