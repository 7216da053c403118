//! Empirical shifted moments over the four families and their comparison
//! with the recipe predictions.

mod members;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use members::{MemberSource, MemberValue};

use crate::error::{Error, Result};
use crate::lvalues::AfeOptions;
use crate::predict::{EulerOptions, Family, Prediction, PredictionTerm, RecipeMode, ShiftSet, Twist};
use crate::specialfn::TestFunction;
use crate::C64;

/// `sum_{member in supp g . scale} g(member / scale) twist(member) prod L`.
pub fn empirical_moment(
    family: &Family,
    shifts: &ShiftSet,
    twist: Twist,
    scale: f64,
    g: &TestFunction,
    opts: AfeOptions,
) -> Result<C64> {
    let (_, b) = g.support();
    let src = MemberSource::new(family, shifts, twist, (b * scale).floor() as u64, opts)?;
    src.moment(scale, g)
}

/// Empirical values across a scale grid together with the recipe terms.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRun {
    pub family: String,
    pub shifts: ShiftSet,
    pub twist: Twist,
    pub mode: RecipeMode,
    pub test_function: String,
    pub scales: Vec<f64>,
    pub empirical: Vec<C64>,
    /// Member counts inside the support at each scale.
    pub members: Vec<usize>,
    pub terms: Vec<Vec<PredictionTerm>>,
    pub notes: Vec<String>,
}

impl MomentRun {
    pub fn compute(
        family: &Family,
        shifts: &ShiftSet,
        twist: Twist,
        scales: &[f64],
        g: &TestFunction,
        mode: RecipeMode,
        afe: AfeOptions,
        euler: &EulerOptions,
    ) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidInput("empty scale grid".into()));
        }
        if let Some(x) = scales.iter().find(|&&x| !(x >= 10.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!("scale {x} below 10")));
        }
        let (_, b) = g.support();
        let top = scales.iter().cloned().fold(0.0, f64::max);
        let src = MemberSource::new(family, shifts, twist, (b * top).floor() as u64, afe)?;
        let mut empirical = Vec::with_capacity(scales.len());
        let mut members = Vec::with_capacity(scales.len());
        for &x in scales {
            let vals = src.support_values(x, g)?;
            members.push(vals.len());
            empirical.push(MemberSource::weighted_sum(&vals, x, g));
        }
        let prediction = Prediction::new(family, shifts, twist, g, mode, euler)?;
        let terms = scales.iter().map(|&x| prediction.at(x)).collect();
        Ok(MomentRun {
            family: family.label(),
            shifts: shifts.clone(),
            twist,
            mode,
            test_function: g.id(),
            scales: scales.to_vec(),
            empirical,
            members,
            terms,
            notes: prediction.notes,
        })
    }
}

/// One row of a comparison: a scale and the prediction built up term by term.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub scale: f64,
    pub empirical: C64,
    /// Masks of the included terms, by descending real exponent.
    pub term_masks: Vec<(u32, u32)>,
    pub term_values: Vec<C64>,
    /// Running sums of `term_values`.
    pub cumulative: Vec<C64>,
    pub ratio: C64,
    pub residual: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// `|residual| ~ C scale^theta`, least squares in log-log coordinates.
    pub residual_exponent: Option<f64>,
    pub residual_constant: Option<f64>,
}

/// Term selection for [`compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermSelection {
    All,
    /// Terms with `|J| <= n`.
    UpToSwaps(usize),
}

pub fn compare(run: &MomentRun, selection: TermSelection) -> CompareReport {
    let rows: Vec<CompareRow> = run
        .scales
        .iter()
        .zip(&run.empirical)
        .zip(&run.terms)
        .map(|((&scale, &empirical), terms)| {
            let mut chosen: Vec<&PredictionTerm> = terms
                .iter()
                .filter(|t| t.warning.is_none())
                .filter(|t| match selection {
                    TermSelection::All => true,
                    TermSelection::UpToSwaps(n) => t.size() <= n,
                })
                .collect();
            chosen.sort_by(|a, b| {
                b.exponent.re.total_cmp(&a.exponent.re).then((a.j_mask, a.h_mask).cmp(&(b.j_mask, b.h_mask)))
            });
            let mut acc = C64::new(0.0, 0.0);
            let cumulative: Vec<C64> = chosen
                .iter()
                .map(|t| {
                    acc += t.total;
                    acc
                })
                .collect();
            CompareRow {
                scale,
                empirical,
                term_masks: chosen.iter().map(|t| (t.j_mask, t.h_mask)).collect(),
                term_values: chosen.iter().map(|t| t.total).collect(),
                cumulative,
                ratio: empirical / acc,
                residual: empirical - acc,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.residual.norm() > 0.0)
        .map(|r| (r.scale.ln(), r.residual.norm().ln()))
        .collect();
    let (residual_exponent, residual_constant) = match fit_line(&pts) {
        Some((slope, icept)) => (Some(slope), Some(icept.exp())),
        None => (None, None),
    };
    CompareReport { rows, residual_exponent, residual_constant }
}

fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Per-scale outcome of the one-term versus two-term elliptic comparison.
#[derive(Debug, Clone, Serialize)]
pub struct AppendixRow {
    pub scale: f64,
    pub empirical: f64,
    pub one_term: f64,
    pub two_term: f64,
    pub residual_one: f64,
    pub residual_two: f64,
    pub relative_two: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Two-term residual smaller at every scale.
    TwoTermBetter,
    /// One-term residual smaller at every scale.
    OneTermBetter,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixReport {
    pub curve: String,
    pub m: u64,
    pub alpha: f64,
    pub rows: Vec<AppendixRow>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// First moment of `L(1/2 + alpha, E x chi_d)` against the unmodified
/// (one-term) and modified (two-term) predictions.
pub fn appendix_experiment(
    curve: std::sync::Arc<crate::coeffs::EllipticCurve>,
    m: u64,
    alpha: f64,
    scales: &[f64],
    g: &TestFunction,
    afe: AfeOptions,
    euler: &EulerOptions,
) -> Result<AppendixReport> {
    if !(alpha > 0.05 && alpha < 0.25) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} outside (0.05, 0.25)")));
    }
    let label = curve.label().to_string();
    let family = Family::Elliptic(curve);
    let shifts = ShiftSet::real(&[0.5 + alpha])?;
    let run = MomentRun::compute(&family, &shifts, Twist::m(m)?, scales, g, RecipeMode::Modified, afe, euler)?;
    let rows: Vec<AppendixRow> = run
        .scales
        .iter()
        .zip(&run.empirical)
        .zip(&run.terms)
        .map(|((&scale, &emp), terms)| {
            let one: C64 = terms.iter().filter(|t| t.j_mask == 0).map(|t| t.total).sum();
            let two: C64 = terms.iter().map(|t| t.total).sum();
            AppendixRow {
                scale,
                empirical: emp.re,
                one_term: one.re,
                two_term: two.re,
                residual_one: (emp - one).re,
                residual_two: (emp - two).re,
                relative_two: ((emp - two) / two).re,
            }
        })
        .collect();
    let verdict = if rows.iter().all(|r| r.residual_two.abs() < r.residual_one.abs()) {
        Verdict::TwoTermBetter
    } else if rows.iter().all(|r| r.residual_two.abs() > r.residual_one.abs()) {
        Verdict::OneTermBetter
    } else {
        Verdict::Inconclusive
    };
    Ok(AppendixReport { curve: label, m, alpha, rows, verdict, notes: run.notes })
}

/// Parameters of a run, hashed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Sorted key/value pairs of the effective configuration.
    pub parameters: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, mut parameters: Vec<(String, String)>) -> Self {
        parameters.sort();
        Manifest {
            tool: "qmoments".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        format!("{:x}", Sha256::digest(&json))
    }
}
