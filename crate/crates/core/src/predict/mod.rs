//! Arithmetic factors and recipe predictions for the four families.

mod factors;
mod symbolic;

use std::sync::Arc;

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

pub use factors::{
    factor_b, factor_b_direct, factor_h, factor_h_direct, factor_t, factor_t_direct, half_inv_zeta2, EulerOptions,
    FactorValue, DIRECT_MARGIN,
};
pub use symbolic::{mask_members, Affine, ChiTerm, FactorKind, FactorRef, SymbolicTerm, Var};

use crate::coeffs::{EllipticCurve, HeckeSource, ModularForm};
use crate::error::{Error, Result};
use crate::specialfn::{chi_factor, mellin64, ChiFactorKind, TestFunction};
use crate::{C64, Q64};

/// Which of the two elliptic recipes to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeMode {
    /// Only even `|J|`.
    Unmodified,
    /// All `J`, with the twist index `M N^{|J|}`.
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Unitary,
    Symplectic,
    Orthogonal,
    Elliptic,
}

/// A family together with the data it depends on.
#[derive(Debug, Clone)]
pub enum Family {
    Unitary,
    Symplectic,
    Orthogonal(Arc<ModularForm>),
    Elliptic(Arc<EllipticCurve>),
}

impl Family {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Unitary => FamilyKind::Unitary,
            Family::Symplectic => FamilyKind::Symplectic,
            Family::Orthogonal(_) => FamilyKind::Orthogonal,
            Family::Elliptic(_) => FamilyKind::Elliptic,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Unitary => "unitary".into(),
            Family::Symplectic => "symplectic".into(),
            Family::Orthogonal(f) => format!("orthogonal[{}]", f.label()),
            Family::Elliptic(e) => format!("elliptic[{}]", e.label()),
        }
    }

    /// Chi-factor of the family.
    pub fn chi_kind(&self) -> ChiFactorKind {
        match self {
            Family::Unitary | Family::Symplectic => ChiFactorKind::Riemann,
            Family::Orthogonal(f) => ChiFactorKind::Modular { weight: f.weight() },
            Family::Elliptic(e) => {
                ChiFactorKind::Elliptic { conductor: e.conductor(), root_number: e.root_number() as i8 }
            }
        }
    }

    /// Level entering the twist index (`N` for curves, 1 otherwise).
    pub fn level(&self) -> u64 {
        match self {
            Family::Elliptic(e) => e.conductor(),
            _ => 1,
        }
    }

    fn hecke(&self) -> Option<Arc<dyn HeckeSource>> {
        match self {
            Family::Orthogonal(f) => Some(f.clone() as Arc<dyn HeckeSource>),
            Family::Elliptic(e) => Some(e.clone() as Arc<dyn HeckeSource>),
            _ => None,
        }
    }
}

/// Shifts `s_1..s_k` and, for the unitary family, `z_1..z_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSet {
    pub s: Vec<C64>,
    pub z: Vec<C64>,
}

impl ShiftSet {
    pub fn new(s: Vec<C64>) -> Result<Self> {
        Self::unitary(s, Vec::new())
    }

    pub fn real(s: &[f64]) -> Result<Self> {
        Self::new(s.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn unitary(s: Vec<C64>, z: Vec<C64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidInput("at least one shift is required".into()));
        }
        if !z.is_empty() && z.len() != s.len() {
            return Err(Error::InvalidInput(format!("{} s-shifts but {} z-shifts", s.len(), z.len())));
        }
        if s.len() > 16 {
            return Err(Error::InvalidInput("at most 16 shifts are supported".into()));
        }
        Ok(ShiftSet { s, z })
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    fn require_z(&self, family: FamilyKind) -> Result<()> {
        match (family, self.z.is_empty()) {
            (FamilyKind::Unitary, true) => Err(Error::InvalidInput("the unitary family needs z-shifts".into())),
            (FamilyKind::Unitary, false) | (_, true) => Ok(()),
            (_, false) => Err(Error::InvalidInput("z-shifts only apply to the unitary family".into())),
        }
    }
}

/// `s_j -> 1 - s_j` for `j` in the mask.
pub fn subset_transform(s: &[C64], mask: u32) -> Vec<C64> {
    s.iter()
        .enumerate()
        .map(|(j, &x)| if mask & (1 << j) != 0 { 1.0 - x } else { x })
        .collect()
}

/// Twist integers `M` and (unitary only) `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Twist {
    pub m: u64,
    pub n: u64,
}

impl Twist {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidInput("twist integers must be positive".into()));
        }
        Ok(Twist { m, n })
    }

    pub fn m(m: u64) -> Result<Self> {
        Self::new(m, 1)
    }
}

/// Admissible `(J, H)` masks in binary order: `|J| = |H|` for the unitary
/// family, all `J` otherwise, even `|J|` for the unmodified elliptic recipe.
pub fn admissible_subsets(kind: FamilyKind, k: usize, mode: RecipeMode) -> Vec<(u32, u32)> {
    let all = 1u32 << k;
    match kind {
        FamilyKind::Unitary => (0..all)
            .flat_map(|j| (0..all).filter(move |h| h.count_ones() == j.count_ones()).map(move |h| (j, h)))
            .collect(),
        FamilyKind::Elliptic if mode == RecipeMode::Unmodified => {
            (0..all).filter(|j| j.count_ones() % 2 == 0).map(|j| (j, 0)).collect()
        }
        _ => (0..all).map(|j| (j, 0)).collect(),
    }
}

/// The recipe terms in symbolic form, read off the conjectured formulas.
pub fn recipe_symbolic(family: &Family, k: usize, twist: Twist, mode: RecipeMode) -> Vec<SymbolicTerm> {
    let kind = family.kind();
    let kz = if kind == FamilyKind::Unitary { k } else { 0 };
    let chi_kind = family.chi_kind();
    let q = Q64::from_integer;
    admissible_subsets(kind, k, mode)
        .into_iter()
        .map(|(jm, hm)| {
            let js = mask_members(jm, k);
            let hs = mask_members(hm, kz);
            let sum_j = js.iter().fold(Affine::int(k, kz, 0), |a, &j| a.add(&Affine::var(k, kz, Var::S(j))));
            let sum_h = hs.iter().fold(Affine::int(k, kz, 0), |a, &h| a.add(&Affine::var(k, kz, Var::Z(h))));
            let nj = js.len() as i64;
            let exponent = match kind {
                FamilyKind::Unitary => Affine::int(k, kz, 2 + nj).sub(&sum_j).sub(&sum_h),
                FamilyKind::Symplectic => Affine::constant(k, kz, q(1) + Q64::new(nj, 2)).sub(&sum_j),
                FamilyKind::Orthogonal | FamilyKind::Elliptic => {
                    Affine::int(k, kz, 1 + nj).sub(&sum_j.scale(q(2)))
                }
            };
            let mut chi: Vec<ChiTerm> =
                js.iter().map(|&j| ChiTerm { kind: chi_kind, arg: Affine::var(k, kz, Var::S(j)) }).collect();
            chi.extend(hs.iter().map(|&h| ChiTerm { kind: chi_kind, arg: Affine::var(k, kz, Var::Z(h)) }));
            // S \ S_J  u  S_J^-, and for the unitary family the Z_H^- / S_J^- exchange.
            let factor = if kind == FamilyKind::Unitary {
                let mut args: Vec<Affine> =
                    (0..k).filter(|j| !js.contains(j)).map(|j| Affine::var(k, kz, Var::S(j))).collect();
                args.extend(hs.iter().map(|&h| Affine::var(k, kz, Var::Z(h)).reflect()));
                let mut dual: Vec<Affine> =
                    (0..kz).filter(|h| !hs.contains(h)).map(|h| Affine::var(k, kz, Var::Z(h))).collect();
                dual.extend(js.iter().map(|&j| Affine::var(k, kz, Var::S(j)).reflect()));
                FactorRef { kind: FactorKind::B, m: twist.m, n: twist.n, level_power: 0, args, dual_args: dual }
            } else {
                let args = (0..k)
                    .map(|j| {
                        let v = Affine::var(k, kz, Var::S(j));
                        if js.contains(&j) {
                            v.reflect()
                        } else {
                            v
                        }
                    })
                    .collect();
                let (fk, level_power) = match kind {
                    FamilyKind::Symplectic => (FactorKind::T, 0),
                    FamilyKind::Elliptic if mode == RecipeMode::Modified => (FactorKind::H, nj as u32),
                    _ => (FactorKind::H, 0),
                };
                FactorRef { kind: fk, m: twist.m, n: 1, level_power, args, dual_args: Vec::new() }
            };
            SymbolicTerm { j_mask: jm, h_mask: hm, exponent, chi, factor }.normalized()
        })
        .collect()
}

/// Pole of the transported series for one subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleLocation {
    pub j_mask: u32,
    pub h_mask: u32,
    pub w0: C64,
    /// `sigma(w) - w` as an exact form in the shifts.
    pub sigma_shift: String,
}

/// `sigma_J(w)` (or `sigma_{J,H}(w)`) at a numeric `w`.
pub fn sigma(kind: FamilyKind, shifts: &ShiftSet, j_mask: u32, h_mask: u32, w: C64) -> C64 {
    let sj: C64 = mask_members(j_mask, shifts.k()).iter().map(|&j| shifts.s[j]).sum();
    let nj = j_mask.count_ones() as f64;
    match kind {
        FamilyKind::Unitary => {
            let sh: C64 = mask_members(h_mask, shifts.z.len()).iter().map(|&h| shifts.z[h]).sum();
            w + sj + sh - nj / 2.0 - h_mask.count_ones() as f64 / 2.0
        }
        FamilyKind::Symplectic => w + sj - nj / 2.0,
        FamilyKind::Orthogonal | FamilyKind::Elliptic => w + sj * 2.0 - nj,
    }
}

/// The `w` where the transported series has its pole, per admissible subset.
pub fn pole_locations(kind: FamilyKind, shifts: &ShiftSet) -> Result<Vec<PoleLocation>> {
    shifts.require_z(kind)?;
    let base = if kind == FamilyKind::Unitary { 2.0 } else { 1.0 };
    let k = shifts.k();
    let kz = shifts.z.len();
    Ok(admissible_subsets(kind, k, RecipeMode::Modified)
        .into_iter()
        .map(|(jm, hm)| {
            let shift = sigma(kind, shifts, jm, hm, C64::new(0.0, 0.0));
            let mut sym = Affine::int(k, kz, 0);
            for j in mask_members(jm, k) {
                let v = Affine::var(k, kz, Var::S(j)).sub(&Affine::constant(k, kz, Q64::new(1, 2)));
                sym = sym.add(&if matches!(kind, FamilyKind::Orthogonal | FamilyKind::Elliptic) {
                    v.scale(Q64::from_integer(2))
                } else {
                    v
                });
            }
            for h in mask_members(hm, kz) {
                sym = sym.add(&Affine::var(k, kz, Var::Z(h)).sub(&Affine::constant(k, kz, Q64::new(1, 2))));
            }
            PoleLocation { j_mask: jm, h_mask: hm, w0: base - shift, sigma_shift: sym.to_string() }
        })
        .collect())
}

/// A recipe term with numbers attached.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionTerm {
    pub j_mask: u32,
    pub h_mask: u32,
    pub exponent: C64,
    pub exponent_symbolic: String,
    pub scale: f64,
    pub scale_power: C64,
    pub mellin: C64,
    pub chi_product: C64,
    pub factor: C64,
    pub factor_tail: f64,
    /// `M` actually passed to the factor (after `N^{|J|}` for curves).
    pub factor_twist: u64,
    pub total: C64,
    /// Set when a factor or chi value sits on a pole and the term is unusable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    /// Set when the term is kept but its factor is only a truncated value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PredictionTerm {
    pub fn size(&self) -> usize {
        self.j_mask.count_ones() as usize
    }
}

/// Scale-independent part of a term.
#[derive(Debug, Clone, Serialize)]
pub struct TermData {
    pub symbolic: SymbolicTerm,
    pub exponent: C64,
    pub mellin: C64,
    pub chi_product: C64,
    pub factor: C64,
    pub factor_tail: f64,
    pub factor_twist: u64,
    pub warning: Option<String>,
    pub note: Option<String>,
}

/// All recipe terms for a family and shift set; evaluate at any scale with [`Prediction::at`].
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub family: String,
    pub mode: RecipeMode,
    pub shifts: ShiftSet,
    pub twist: Twist,
    pub test_function: String,
    pub terms: Vec<TermData>,
    /// Reported choices that differ from a literal reading of the formulas.
    pub notes: Vec<String>,
}

fn evaluate_factor(
    family: &Family,
    r: &FactorRef,
    shifts: &ShiftSet,
    opts: &EulerOptions,
) -> Result<(FactorValue, u64)> {
    let args: Vec<C64> = r.args.iter().map(|a| a.eval(&shifts.s, &shifts.z)).collect();
    let m = r.effective_m(family.level());
    match r.kind {
        FactorKind::B => {
            let dual: Vec<C64> = r.dual_args.iter().map(|a| a.eval(&shifts.s, &shifts.z)).collect();
            Ok((factor_b(r.m, r.n, &args, &dual, opts)?, r.m))
        }
        FactorKind::T => Ok((factor_t(m, &args, opts)?, m)),
        FactorKind::H => {
            let src = family
                .hecke()
                .ok_or_else(|| Error::InvalidInput("H factor needs a form or a curve".into()))?;
            Ok((factor_h(&src, m, &args, opts)?, m))
        }
    }
}

impl Prediction {
    pub fn new(
        family: &Family,
        shifts: &ShiftSet,
        twist: Twist,
        g: &TestFunction,
        mode: RecipeMode,
        opts: &EulerOptions,
    ) -> Result<Self> {
        let kind = family.kind();
        shifts.require_z(kind)?;
        if kind != FamilyKind::Unitary && twist.n != 1 {
            return Err(Error::InvalidInput("the second twist integer only applies to the unitary family".into()));
        }
        if let Family::Elliptic(e) = family {
            if crate::arith::gcd_u64(twist.m, e.conductor()) != 1 {
                return Err(Error::InvalidInput(format!(
                    "M = {} must be coprime to the conductor {}",
                    twist.m,
                    e.conductor()
                )));
            }
        }
        let symbolic = recipe_symbolic(family, shifts.k(), twist, mode);
        let mut p = Self::from_symbolic(family, shifts, twist, g, symbolic, opts)?;
        p.mode = mode;
        if kind == FamilyKind::Elliptic && mode == RecipeMode::Modified && shifts.k() == 1 {
            p.notes.push(
                "odd-|J| factor evaluated at the transformed multiset {1-s}; the k=1 remark's H_{E,MN}(-s) is \
                 treated as a typo"
                    .into(),
            );
        }
        Ok(p)
    }

    /// Numeric values for arbitrary symbolic terms (recipe terms or transported residues).
    pub fn from_symbolic(
        family: &Family,
        shifts: &ShiftSet,
        twist: Twist,
        g: &TestFunction,
        symbolic: Vec<SymbolicTerm>,
        opts: &EulerOptions,
    ) -> Result<Self> {
        shifts.require_z(family.kind())?;
        let terms: Vec<Result<TermData>> = symbolic
            .into_par_iter()
            .map(|sym| {
                let exponent = sym.exponent.eval(&shifts.s, &shifts.z);
                let mellin = mellin64(g, exponent)?;
                let mut warning = None;
                let mut note = None;
                let mut chi_product = C64::one();
                for c in &sym.chi {
                    chi_product *= chi_factor(c.kind, c.arg.eval(&shifts.s, &shifts.z))?;
                }
                let (factor, factor_tail, factor_twist) = match evaluate_factor(family, &sym.factor, shifts, opts) {
                    Ok((v, m)) => {
                        if !v.converged {
                            note = Some(format!(
                                "Euler product truncated at p = {} outside absolute convergence; error bar set to |factor|",
                                v.truncation
                            ));
                        }
                        (v.value, v.tail, m)
                    }
                    Err(e @ (Error::Pole { .. } | Error::OutOfRegion { .. })) => {
                        warning = Some(format!("{e}; term omitted"));
                        (C64::new(f64::NAN, f64::NAN), f64::INFINITY, sym.factor.effective_m(family.level()))
                    }
                    Err(e) => return Err(e),
                };
                Ok(TermData {
                    symbolic: sym,
                    exponent,
                    mellin,
                    chi_product,
                    factor,
                    factor_tail,
                    factor_twist,
                    warning,
                    note,
                })
            })
            .collect();
        let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Prediction {
            family: family.label(),
            mode: RecipeMode::Modified,
            shifts: shifts.clone(),
            twist,
            test_function: g.id(),
            terms,
            notes: Vec::new(),
        })
    }

    /// Terms at a given scale, in binary-mask order.
    pub fn at(&self, scale: f64) -> Vec<PredictionTerm> {
        self.terms
            .iter()
            .map(|t| {
                let scale_power = (t.exponent * scale.ln()).exp();
                let total = scale_power * t.mellin * t.chi_product * t.factor;
                PredictionTerm {
                    j_mask: t.symbolic.j_mask,
                    h_mask: t.symbolic.h_mask,
                    exponent: t.exponent,
                    exponent_symbolic: t.symbolic.exponent.to_string(),
                    scale,
                    scale_power,
                    mellin: t.mellin,
                    chi_product: t.chi_product,
                    factor: t.factor,
                    factor_tail: t.factor_tail,
                    factor_twist: t.factor_twist,
                    total,
                    warning: t.warning.clone(),
                    note: t.note.clone(),
                }
            })
            .collect()
    }

    /// Sum of the usable terms at `scale`.
    pub fn total(&self, scale: f64) -> C64 {
        self.at(scale).iter().filter(|t| t.warning.is_none()).map(|t| t.total).sum()
    }
}

pub fn recipe_unitary(
    q: f64,
    shifts: &ShiftSet,
    twist: Twist,
    g: &TestFunction,
    opts: &EulerOptions,
) -> Result<Vec<PredictionTerm>> {
    Ok(Prediction::new(&Family::Unitary, shifts, twist, g, RecipeMode::Modified, opts)?.at(q))
}

pub fn recipe_symplectic(
    x: f64,
    shifts: &ShiftSet,
    m: u64,
    g: &TestFunction,
    opts: &EulerOptions,
) -> Result<Vec<PredictionTerm>> {
    Ok(Prediction::new(&Family::Symplectic, shifts, Twist::m(m)?, g, RecipeMode::Modified, opts)?.at(x))
}

pub fn recipe_orthogonal(
    x: f64,
    shifts: &ShiftSet,
    f: Arc<ModularForm>,
    m: u64,
    g: &TestFunction,
    opts: &EulerOptions,
) -> Result<Vec<PredictionTerm>> {
    Ok(Prediction::new(&Family::Orthogonal(f), shifts, Twist::m(m)?, g, RecipeMode::Modified, opts)?.at(x))
}

pub fn recipe_elliptic(
    x: f64,
    shifts: &ShiftSet,
    e: Arc<EllipticCurve>,
    m: u64,
    g: &TestFunction,
    mode: RecipeMode,
    opts: &EulerOptions,
) -> Result<Vec<PredictionTerm>> {
    Ok(Prediction::new(&Family::Elliptic(e), shifts, Twist::m(m)?, g, mode, opts)?.at(x))
}
