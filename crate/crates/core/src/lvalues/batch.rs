//! Batch evaluation over a family at a fixed list of shifts: the weight
//! tables, `n^{-s}` and `n^{s-1}` are shared by all members.

use std::sync::Arc;

use super::{check_s, kronecker_table, ln_table, shared_sieve, AfeOptions};
use crate::arith::{gcd_u64, kronecker, FundamentalDiscriminant};
use crate::characters::DirichletCharacter;
use crate::coeffs::{EllipticCurve, HeckeSource, ModularForm};
use crate::error::{Error, Result};
use crate::specialfn::{zeta, GammaFactor, WeightTable};
use crate::C64;

/// Base object of a quadratic-twist family.
#[derive(Debug, Clone)]
pub enum TwistFamily {
    /// `chi_d` itself.
    Quadratic,
    /// `f x chi_d`.
    Form(Arc<ModularForm>),
    /// `E_d`, `gcd(d, N) = 1`.
    Curve(Arc<EllipticCurve>),
}

impl TwistFamily {
    pub fn gamma(&self) -> GammaFactor {
        match self {
            TwistFamily::Quadratic => GammaFactor::Dirichlet,
            TwistFamily::Form(f) => GammaFactor::Shifted { twice_a: f.weight() - 1 },
            TwistFamily::Curve(_) => GammaFactor::Shifted { twice_a: 1 },
        }
    }

    /// Level of the base object (1 unless a curve).
    pub fn level(&self) -> u64 {
        match self {
            TwistFamily::Curve(e) => e.conductor(),
            _ => 1,
        }
    }

    /// Conductor of the member indexed by `d`.
    pub fn conductor(&self, d: u64) -> f64 {
        match self {
            TwistFamily::Quadratic => d as f64,
            _ => (d as f64).powi(2) * self.level() as f64,
        }
    }

    /// Root number of the member indexed by `d`.
    pub fn root_number(&self, d: FundamentalDiscriminant) -> f64 {
        match self {
            TwistFamily::Quadratic => 1.0,
            TwistFamily::Form(f) => {
                if f.weight() % 4 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            TwistFamily::Curve(e) => (e.root_number() as i32 * d.chi(-(e.conductor() as i64))) as f64,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TwistFamily::Quadratic => "quadratic".into(),
            TwistFamily::Form(f) => f.id(),
            TwistFamily::Curve(e) => format!("curve:{}", e.label()),
        }
    }

    /// The single-member object, for cross-checks against the batch path.
    pub fn member(&self, d: FundamentalDiscriminant) -> super::LFunction {
        match self {
            TwistFamily::Quadratic => super::LFunction::Quadratic(d),
            TwistFamily::Form(f) => super::LFunction::FormTwist(f.clone(), d),
            TwistFamily::Curve(e) => super::LFunction::CurveTwist(e.clone(), d),
        }
    }

    fn coefficients(&self, limit: usize) -> Result<Option<Arc<Vec<f64>>>> {
        Ok(match self {
            TwistFamily::Quadratic => None,
            TwistFamily::Form(f) => Some(f.coefficients(limit)?),
            TwistFamily::Curve(e) => Some(e.coefficients(limit)?),
        })
    }
}

#[derive(Debug)]
struct ShiftData {
    s: C64,
    v_s: Arc<WeightTable>,
    v_dual: Arc<WeightTable>,
    cut_s: f64,
    cut_dual: f64,
    /// `ln gamma(1 - s) - ln gamma(s)`.
    ln_gamma_ratio: C64,
    pow_s: Vec<C64>,
    pow_dual: Vec<C64>,
}

impl ShiftData {
    fn new(gamma: GammaFactor, s: C64, opts: &AfeOptions, len: usize, logs: &[f64]) -> Result<Self> {
        check_s(s)?;
        let one = C64::new(1.0, 0.0);
        let v_s = WeightTable::get(gamma, s)?;
        let v_dual = WeightTable::get(gamma, one - s)?;
        let cut_s = v_s.ln_y_cutoff(opts.weight_eps) + opts.length_factor.ln();
        let cut_dual = v_dual.ln_y_cutoff(opts.weight_eps) + opts.length_factor.ln();
        let ln_gamma_ratio = gamma.ln_gamma(one - s)? - gamma.ln_gamma(s)?;
        let pow_s = (0..=len).map(|n| if n == 0 { one } else { (-s * logs[n]).exp() }).collect();
        let pow_dual = (0..=len).map(|n| if n == 0 { one } else { ((s - 1.0) * logs[n]).exp() }).collect();
        Ok(ShiftData { s, v_s, v_dual, cut_s, cut_dual, ln_gamma_ratio, pow_s, pow_dual })
    }

    fn lengths(&self, ln_scale: (f64, f64)) -> (usize, usize) {
        ((self.cut_s + ln_scale.0).exp() as usize, (self.cut_dual + ln_scale.1).exp() as usize)
    }
}

/// `L(s_j, member_d)` for all `j` and any `d <= d_max`.
#[derive(Debug)]
pub struct TwistEngine {
    family: TwistFamily,
    d_max: u64,
    opts: AfeOptions,
    shifts: Vec<ShiftData>,
    base: Option<Arc<Vec<f64>>>,
    logs: Arc<Vec<f64>>,
    len: usize,
}

impl TwistEngine {
    pub fn new(family: TwistFamily, shifts: &[C64], d_max: u64, opts: AfeOptions) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidInput("no shifts".into()));
        }
        opts.validate()?;
        let gamma = family.gamma();
        let half_ln_q = 0.5 * family.conductor(d_max.max(1)).ln();
        let ln_x = opts.split.ln();
        let mut len = 1usize;
        for &s in shifts {
            check_s(s)?;
            let v = WeightTable::get(gamma, s)?;
            let w = WeightTable::get(gamma, C64::new(1.0, 0.0) - s)?;
            let a = (v.ln_y_cutoff(opts.weight_eps) + half_ln_q + ln_x).exp();
            let b = (w.ln_y_cutoff(opts.weight_eps) + half_ln_q - ln_x).exp();
            len = len.max((a.max(b) * opts.length_factor) as usize + 1);
        }
        if len as f64 > super::MAX_LENGTH {
            return Err(Error::Accuracy { achieved: f64::NAN, requested: opts.weight_eps });
        }
        let logs = ln_table(len);
        let shifts = shifts
            .iter()
            .map(|&s| ShiftData::new(gamma, s, &opts, len, &logs))
            .collect::<Result<Vec<_>>>()?;
        let base = family.coefficients(len)?;
        Ok(TwistEngine { family, d_max, opts, shifts, base, logs, len })
    }

    pub fn family(&self) -> &TwistFamily {
        &self.family
    }

    /// Longest smoothed sum needed up to `d_max`.
    pub fn max_length(&self) -> usize {
        self.len
    }

    /// `chi_d(n)` for `n <= len`, through a table mod `d` when that is shorter.
    fn characters(&self, d: FundamentalDiscriminant, len: usize) -> Vec<f64> {
        let q = d.get() as usize;
        if len < q {
            return kronecker_table(d, len);
        }
        let mut period = vec![0.0; q];
        let sieve = shared_sieve(q);
        let dd = d.get() as i64;
        sieve.fill_completely_multiplicative(&mut period, 1.0, |p| kronecker(dd, p as i64) as f64);
        if q > 1 {
            period[0] = 0.0;
        } else {
            period[0] = 1.0;
        }
        let mut out = Vec::with_capacity(len + 1);
        let mut r = 0usize;
        for _ in 0..=len {
            out.push(period[r]);
            r += 1;
            if r == q {
                r = 0;
            }
        }
        out
    }

    /// `[L(s_1), ..., L(s_k)]` for the member indexed by `d`.
    pub fn eval(&self, d: FundamentalDiscriminant) -> Result<Vec<C64>> {
        let dv = d.get();
        if dv > self.d_max {
            return Err(Error::InvalidInput(format!("d = {dv} beyond the engine range {}", self.d_max)));
        }
        if let TwistFamily::Quadratic = self.family {
            if dv == 1 {
                return self.shifts.iter().map(|sh| zeta(sh.s)).collect();
            }
        }
        if gcd_u64(dv, self.family.level()) != 1 {
            return Err(Error::InvalidInput(format!(
                "twist d = {dv} is not coprime to N = {}",
                self.family.level()
            )));
        }
        let q = self.family.conductor(dv);
        let half_ln_q = 0.5 * q.ln();
        let ln_x = self.opts.split.ln();
        let ln_scale = (half_ln_q + ln_x, half_ln_q - ln_x);
        let len = self
            .shifts
            .iter()
            .map(|sh| {
                let (a, b) = sh.lengths(ln_scale);
                a.max(b)
            })
            .max()
            .unwrap_or(0)
            .min(self.len);
        let mut c = self.characters(d, len);
        if let Some(base) = &self.base {
            for (x, b) in c.iter_mut().zip(base.iter()) {
                *x *= b;
            }
        }
        let eps = self.family.root_number(d);
        let mut out = Vec::with_capacity(self.shifts.len());
        for sh in &self.shifts {
            let (n1, n2) = sh.lengths(ln_scale);
            let (n1, n2) = (n1.min(len), n2.min(len));
            let mut first = C64::new(0.0, 0.0);
            let mut second = C64::new(0.0, 0.0);
            for n in 1..=n1.max(n2) {
                let cn = c[n];
                if cn == 0.0 {
                    continue;
                }
                let l = self.logs[n];
                if n <= n1 {
                    first += sh.pow_s[n] * sh.v_s.eval_ln(l - ln_scale.0) * cn;
                }
                if n <= n2 {
                    second += sh.pow_dual[n] * sh.v_dual.eval_ln(l - ln_scale.1) * cn;
                }
            }
            let ratio = (sh.ln_gamma_ratio + (0.5 - sh.s) * q.ln()).exp() * eps;
            out.push(first + ratio * second);
        }
        Ok(out)
    }
}

/// `L(s_j, chi)` and `L(z_h, conj chi)` for characters of modulus up to `q_max`.
#[derive(Debug)]
pub struct CharacterEngine {
    q_max: u64,
    ln_split: f64,
    s: Vec<ShiftData>,
    z: Vec<ShiftData>,
    logs: Arc<Vec<f64>>,
    len: usize,
}

impl CharacterEngine {
    /// Even characters only (the gamma factor is fixed per engine).
    pub fn new(s: &[C64], z: &[C64], q_max: u64, opts: AfeOptions) -> Result<Self> {
        opts.validate()?;
        let gamma = GammaFactor::Dirichlet;
        let half_ln_q = 0.5 * (q_max.max(1) as f64).ln();
        let ln_split = opts.split.ln();
        let mut len = 1usize;
        for &x in s.iter().chain(z) {
            check_s(x)?;
            let v = WeightTable::get(gamma, x)?;
            let w = WeightTable::get(gamma, C64::new(1.0, 0.0) - x)?;
            let a = (v.ln_y_cutoff(opts.weight_eps) + half_ln_q + ln_split).exp();
            let b = (w.ln_y_cutoff(opts.weight_eps) + half_ln_q - ln_split).exp();
            len = len.max((a.max(b) * opts.length_factor) as usize + 1);
        }
        let logs = ln_table(len);
        let build = |v: &[C64]| v.iter().map(|&x| ShiftData::new(gamma, x, &opts, len, &logs)).collect::<Result<Vec<_>>>();
        let (s, z) = (build(s)?, build(z)?);
        Ok(CharacterEngine { q_max, ln_split, s, z, logs, len })
    }

    fn sum(&self, sh: &ShiftData, q: f64, values: &[C64], eps: C64, conj: bool) -> C64 {
        let m = values.len();
        let half = 0.5 * q.ln();
        let ln_scale = (half + self.ln_split, half - self.ln_split);
        let (n1, n2) = sh.lengths(ln_scale);
        let (n1, n2) = (n1.min(self.len), n2.min(self.len));
        let mut first = C64::new(0.0, 0.0);
        let mut second = C64::new(0.0, 0.0);
        for n in 1..=n1.max(n2) {
            let v = values[n % m];
            let (a, b) = if conj { (v.conj(), v) } else { (v, v.conj()) };
            let l = self.logs[n];
            if n <= n1 {
                first += a * sh.pow_s[n] * sh.v_s.eval_ln(l - ln_scale.0);
            }
            if n <= n2 {
                second += b * sh.pow_dual[n] * sh.v_dual.eval_ln(l - ln_scale.1);
            }
        }
        let ratio = (sh.ln_gamma_ratio + (0.5 - sh.s) * q.ln()).exp() * eps;
        first + ratio * second
    }

    /// `([L(s_j, chi)], [L(z_h, conj chi)])` for an even primitive `chi`.
    pub fn eval(&self, chi: &DirichletCharacter) -> Result<(Vec<C64>, Vec<C64>)> {
        let q = chi.modulus();
        if q > self.q_max {
            return Err(Error::InvalidInput(format!("modulus {q} beyond the engine range {}", self.q_max)));
        }
        if !chi.is_primitive() {
            return Err(Error::NotPrimitive { modulus: q, conductor: chi.conductor() });
        }
        if !chi.is_even() {
            return Err(Error::InvalidInput("character engine handles even characters only".into()));
        }
        if q == 1 {
            let a = self.s.iter().map(|sh| zeta(sh.s)).collect::<Result<Vec<_>>>()?;
            let b = self.z.iter().map(|sh| zeta(sh.s)).collect::<Result<Vec<_>>>()?;
            return Ok((a, b));
        }
        let values = chi.values();
        let eps = chi.root_number()?;
        let a = self.s.iter().map(|sh| self.sum(sh, q as f64, &values, eps, false)).collect();
        let b = self.z.iter().map(|sh| self.sum(sh, q as f64, &values, eps.conj(), true)).collect();
        Ok((a, b))
    }
}
