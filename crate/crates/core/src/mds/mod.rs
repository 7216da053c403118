//! Truncated multiple Dirichlet series over the families: evaluation,
//! residues as Cesaro means, termwise functional equations, the Perron
//! identity and the transport of poles that reproduces the recipe terms.

mod transport;

use serde::Serialize;

pub use transport::{correspondence, residue_symbolic, CorrespondenceReport, CorrespondenceRow};

use crate::arith::fundamental_discriminants_in;
use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::lvalues::{AfeOptions, FE_CHECK_SPLIT};
use crate::moments::{MemberSource, MemberValue};
use crate::predict::{
    mask_members, pole_locations, sigma, subset_transform, Family, FamilyKind, ShiftSet, Twist,
};
use crate::specialfn::{chi_factor, mellin64, TestFunction};
use crate::C64;

/// Real part of `w` beyond which the series converges absolutely (for shifts
/// with real part above 1).
pub fn convergence_line(kind: FamilyKind) -> f64 {
    if kind == FamilyKind::Unitary {
        2.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MdsEvaluation {
    pub family: String,
    pub shifts: ShiftSet,
    pub twist: Twist,
    pub w: C64,
    pub cutoff: u64,
    pub value: C64,
    /// Geometric extrapolation of the omitted members from the last two dyadic blocks.
    pub truncation_estimate: f64,
    /// `Re w` minus the convergence line.
    pub margin: f64,
    pub members: usize,
    pub warnings: Vec<String>,
}

fn power(m: u64, w: C64) -> C64 {
    (-w * (m as f64).ln()).exp()
}

fn dirichlet_sum(values: &[MemberValue], w: C64) -> C64 {
    values.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + v.value * power(v.member, w))
}

/// Tail estimate from the block sums over `(D/4, D/2]` and `(D/2, D]`.
fn block_tail(values: &[MemberValue], w: C64, cutoff: u64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for v in values {
        let t = (v.value * power(v.member, w)).norm();
        if 2 * v.member > cutoff {
            b2 += t;
        } else if 4 * v.member > cutoff {
            b1 += t;
        }
    }
    if b1 == 0.0 {
        return if b2 == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let rho = b2 / b1;
    if rho < 1.0 {
        b2 * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    }
}

/// `sum_{member <= cutoff} twist * prod L / member^w`.
pub fn mds_eval(
    family: &Family,
    shifts: &ShiftSet,
    twist: Twist,
    w: C64,
    cutoff: u64,
    opts: AfeOptions,
) -> Result<MdsEvaluation> {
    let src = MemberSource::new(family, shifts, twist, cutoff, opts)?;
    let values = src.values(&src.members_in(1, cutoff))?;
    let value = dirichlet_sum(&values, w);
    let truncation_estimate = block_tail(&values, w, cutoff);
    let margin = w.re - convergence_line(family.kind());
    let mut warnings = Vec::new();
    if margin <= 0.0 {
        warnings.push(format!("Re w = {} is not beyond the convergence line; truncated value only", w.re));
    }
    if !truncation_estimate.is_finite() || truncation_estimate > 1e-3 * value.norm() {
        warnings.push(format!("cutoff {cutoff} too small: truncation estimate {truncation_estimate:e}"));
    }
    Ok(MdsEvaluation {
        family: family.label(),
        shifts: shifts.clone(),
        twist,
        w,
        cutoff,
        value,
        truncation_estimate,
        margin,
        members: values.len(),
        warnings,
    })
}

/// Cesaro means of the family sum at `D/4`, `D/2`, `D` and their extrapolation.
#[derive(Debug, Clone, Serialize)]
pub struct ResidueEstimate {
    pub family: String,
    pub cutoffs: [u64; 3],
    pub means: [C64; 3],
    /// Assumed decay `D^{-gamma}` of the leading correction.
    pub gamma: f64,
    pub extrapolated: C64,
    /// Relative gap between the extrapolations from `(D/4, D/2)` and `(D/2, D)`.
    pub spread: f64,
    pub converged: bool,
    /// `|mean(D) - mean(D/2)| < |mean(D/2) - mean(D/4)|`.
    pub monotone: bool,
}

/// Residue of the series at its rightmost pole, as the normalized partial sum
/// `sum_{m <= D} value(m) / D` (or `/(D^2/2)` for the unitary family).
pub fn empirical_residue(
    family: &Family,
    shifts: &ShiftSet,
    twist: Twist,
    d_max: u64,
    opts: AfeOptions,
) -> Result<ResidueEstimate> {
    if d_max < 16 {
        return Err(Error::InvalidInput(format!("cutoff {d_max} too small for a residue estimate")));
    }
    let kind = family.kind();
    let base = convergence_line(kind);
    let next = pole_locations(kind, shifts)?
        .iter()
        .filter(|p| p.j_mask != 0 || p.h_mask != 0)
        .map(|p| p.w0.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let gamma = if next.is_finite() { (base - next).clamp(0.05, 1.0) } else { 1.0 };
    let src = MemberSource::new(family, shifts, twist, d_max, opts)?;
    let values = src.values(&src.members_in(1, d_max))?;
    let cutoffs = [d_max / 4, d_max / 2, d_max];
    let mut means = [C64::new(0.0, 0.0); 3];
    for (i, &d) in cutoffs.iter().enumerate() {
        let s: C64 = values.iter().filter(|v| v.member <= d).map(|v| v.value).sum();
        let norm = if kind == FamilyKind::Unitary { (d as f64).powi(2) / 2.0 } else { d as f64 };
        means[i] = s / norm;
    }
    let f = 2f64.powf(gamma);
    let ext = |a: C64, b: C64| (b * f - a) / (f - 1.0);
    let hi = ext(means[1], means[2]);
    let lo = ext(means[0], means[1]);
    let spread = (hi - lo).norm() / hi.norm();
    Ok(ResidueEstimate {
        family: family.label(),
        cutoffs,
        means,
        gamma,
        extrapolated: hi,
        spread,
        converged: spread <= 0.1,
        monotone: (means[2] - means[1]).norm() < (means[1] - means[0]).norm(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FuncEqReport {
    pub family: String,
    pub j_mask: u32,
    pub h_mask: u32,
    pub w: C64,
    pub sigma: C64,
    pub cutoff: u64,
    /// Twist index on the right-hand side.
    pub rhs_twist: Twist,
    pub lhs: C64,
    pub rhs: C64,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Default pass threshold of [`funceq_check`].
pub const FUNCEQ_TOL: f64 = 1e-6;

/// Compares `A(S; w)` with `prod X(s_j) A(S^J; sigma_J(w))`, member by member
/// over `member <= cutoff`. The right side uses a different AFE split so the
/// two sides are not the same arithmetic.
#[allow(clippy::too_many_arguments)]
pub fn funceq_check(
    family: &Family,
    shifts: &ShiftSet,
    twist: Twist,
    j_mask: u32,
    h_mask: u32,
    w: C64,
    cutoff: u64,
    opts: AfeOptions,
) -> Result<FuncEqReport> {
    let kind = family.kind();
    let k = shifts.k();
    if j_mask >> k != 0 || h_mask >> shifts.z.len() != 0 {
        return Err(Error::InvalidInput("subset mask out of range".into()));
    }
    if kind == FamilyKind::Unitary && j_mask.count_ones() != h_mask.count_ones() {
        return Err(Error::InvalidInput("unitary check needs |J| = |H|".into()));
    }
    if kind != FamilyKind::Unitary && h_mask != 0 {
        return Err(Error::InvalidInput("H only applies to the unitary family".into()));
    }
    let js = mask_members(j_mask, k);
    let hs = mask_members(h_mask, shifts.z.len());
    let (rhs_shifts, rhs_twist) = if kind == FamilyKind::Unitary {
        // L(s_j, chi) -> L(1 - s_j, conj chi) and L(z_h, conj chi) -> L(1 - z_h, chi).
        let mut s: Vec<C64> = (0..k).filter(|j| !js.contains(j)).map(|j| shifts.s[j]).collect();
        s.extend(hs.iter().map(|&h| 1.0 - shifts.z[h]));
        let mut z: Vec<C64> = (0..k).filter(|h| !hs.contains(h)).map(|h| shifts.z[h]).collect();
        z.extend(js.iter().map(|&j| 1.0 - shifts.s[j]));
        (ShiftSet::unitary(s, z)?, twist)
    } else {
        let t = if kind == FamilyKind::Elliptic {
            Twist::m(twist.m * family.level().pow(js.len() as u32))?
        } else {
            twist
        };
        (ShiftSet::new(subset_transform(&shifts.s, j_mask))?, t)
    };
    let rhs_opts = if j_mask == 0 && h_mask == 0 { opts } else { opts.with_split(FE_CHECK_SPLIT) };
    let chi_kind = family.chi_kind();
    let mut chi = C64::new(1.0, 0.0);
    for &j in &js {
        chi *= chi_factor(chi_kind, shifts.s[j])?;
    }
    for &h in &hs {
        chi *= chi_factor(chi_kind, shifts.z[h])?;
    }
    let sig = sigma(kind, shifts, j_mask, h_mask, w);
    let left = MemberSource::new(family, shifts, twist, cutoff, opts)?;
    let right = MemberSource::new(family, &rhs_shifts, rhs_twist, cutoff, rhs_opts)?;
    let members = left.members_in(1, cutoff);
    let lv = left.values(&members)?;
    let rv = right.values(&members)?;
    let lhs = dirichlet_sum(&lv, w);
    let rhs = dirichlet_sum(&rv, sig) * chi;
    let defect = (lhs - rhs).norm();
    Ok(FuncEqReport {
        family: family.label(),
        j_mask,
        h_mask,
        w,
        sigma: sig,
        cutoff,
        rhs_twist,
        lhs,
        rhs,
        defect,
        tolerance: FUNCEQ_TOL,
        pass: defect < FUNCEQ_TOL,
    })
}

/// Vertical-line quadrature: nodes `c + i n h` for `|n h| <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerronOptions {
    pub step: f64,
    pub t_max: f64,
}

impl Default for PerronOptions {
    fn default() -> Self {
        PerronOptions { step: 0.5, t_max: 2000.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerronReport {
    pub family: String,
    pub scale: f64,
    pub c: f64,
    pub cutoff: u64,
    pub nodes: usize,
    /// `(1/2 pi i) int A(w) g~(w) scale^w dw`.
    pub lhs: C64,
    /// The moment summed directly over the same members.
    pub rhs: C64,
    /// `|lhs - rhs| / |rhs|`.
    pub defect: f64,
    /// Contribution of the outer quarter of the line, as a size estimate of the cut-off tail.
    pub tail_estimate: f64,
    pub members: usize,
}

/// Perron/Mellin inversion against the direct moment, over `member <= cutoff`.
#[allow(clippy::too_many_arguments)]
pub fn perron_check(
    family: &Family,
    shifts: &ShiftSet,
    twist: Twist,
    scale: f64,
    g: &TestFunction,
    c: f64,
    cutoff: u64,
    quad: PerronOptions,
    opts: AfeOptions,
) -> Result<PerronReport> {
    if !(quad.step > 0.0 && quad.t_max > quad.step) {
        return Err(Error::InvalidInput("quadrature needs 0 < step < t_max".into()));
    }
    let values = if cutoff == 0 {
        Vec::new()
    } else {
        let src = MemberSource::new(family, shifts, twist, cutoff, opts)?;
        src.values(&src.members_in(1, cutoff))?
    };
    let (a, b) = g.support();
    let rhs = values
        .iter()
        .filter(|v| (v.member as f64) >= a * scale && (v.member as f64) <= b * scale)
        .fold(C64::new(0.0, 0.0), |acc, v| acc + v.value * g.eval(v.member as f64 / scale));
    let n = (quad.t_max / quad.step).floor() as i64;
    let ln_x = scale.ln();
    let node = |i: i64| -> Result<C64> {
        let w = C64::new(c, i as f64 * quad.step);
        Ok(dirichlet_sum(&values, w) * mellin64(g, w)? * (w * ln_x).exp())
    };
    use rayon::prelude::*;
    let terms: Vec<Result<C64>> = (-n..=n).into_par_iter().map(node).collect();
    let mut lhs = C64::new(0.0, 0.0);
    let mut outer = C64::new(0.0, 0.0);
    for (i, t) in (-n..=n).zip(terms) {
        let t = t?;
        lhs += t;
        if 4 * i.abs() > 3 * n {
            outer += t;
        }
    }
    let wt = quad.step / (2.0 * std::f64::consts::PI);
    let lhs = lhs * wt;
    let defect = if rhs.norm() > 0.0 { (lhs - rhs).norm() / rhs.norm() } else { lhs.norm() };
    Ok(PerronReport {
        family: family.label(),
        scale,
        c,
        cutoff,
        nodes: (2 * n + 1) as usize,
        lhs,
        rhs,
        defect,
        tail_estimate: (outer * wt).norm(),
        members: values.len(),
    })
}

/// `L_D(w, chi) = sum_{d <= D} chi(d) d^{-w}` over positive fundamental discriminants.
pub fn l_d(w: C64, chi: &DirichletCharacter, cutoff: u64) -> C64 {
    fundamental_discriminants_in(1, cutoff, 1)
        .into_iter()
        .fold(C64::new(0.0, 0.0), |acc, d| acc + chi.eval(d.get() as i64) * power(d.get(), w))
}
