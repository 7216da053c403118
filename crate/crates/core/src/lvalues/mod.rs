//! L-values of Dirichlet characters, quadratic characters, quadratic twists of
//! a level-1 form or an elliptic curve, and symmetric squares, by smoothed
//! approximate functional equations.
//!
//! Every object is normalized so that `Lambda(s) = Q^{s/2} gamma(s) L(s)`
//! satisfies `Lambda(s) = eps * conj(Lambda)(1 - s)`.

mod batch;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;

pub use batch::{CharacterEngine, TwistEngine, TwistFamily};

use crate::arith::{FundamentalDiscriminant, Sieve};
use crate::characters::DirichletCharacter;
use crate::coeffs::{EllipticCurve, HeckeSource, ModularForm};
use crate::error::{Error, Result};
use crate::specialfn::{chi_factor, zeta, ChiFactorKind, GammaFactor, WeightTable};
use crate::C64;

/// Knobs of the smoothed sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AfeOptions {
    /// Balance `X` between the two sums: lengths scale like `X sqrt Q` and `sqrt Q / X`.
    pub split: f64,
    /// Multiplies both truncation points.
    pub length_factor: f64,
    /// Terms whose weight is below this are dropped.
    pub weight_eps: f64,
}

impl Default for AfeOptions {
    fn default() -> Self {
        AfeOptions { split: 1.0, length_factor: 1.0, weight_eps: 1e-16 }
    }
}

impl AfeOptions {
    pub fn with_split(self, split: f64) -> Self {
        AfeOptions { split, ..self }
    }

    pub fn with_length_factor(self, length_factor: f64) -> Self {
        AfeOptions { length_factor, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.length_factor > 0.0 && self.weight_eps > 0.0) {
            return Err(Error::InvalidInput(format!("bad AFE options {self:?}")));
        }
        Ok(())
    }
}

/// Functional-equation data `(gamma, Q, eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeData {
    pub gamma: GammaFactor,
    pub conductor: f64,
    pub root_number: C64,
}

/// Prepared AFE at one point `s`: weight tables, truncation points and the
/// factor `eps Q^{1/2 - s} gamma(1 - s) / gamma(s)`.
#[derive(Debug, Clone)]
pub struct AfePlan {
    pub s: C64,
    v_s: Arc<WeightTable>,
    v_dual: Arc<WeightTable>,
    /// `ln(X sqrt Q)` and `ln(sqrt Q / X)`.
    ln_scale: (f64, f64),
    pub lengths: (usize, usize),
    pub ratio: C64,
}

const MAX_LENGTH: f64 = 4.0e8;

pub(crate) fn check_s(s: C64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) || s.re < -2.5 || s.re > 3.5 || s.im.abs() > 40.0 {
        return Err(Error::InvalidInput(format!(
            "s = {s} outside the supported window -2.5 <= Re s <= 3.5, |Im s| <= 40"
        )));
    }
    Ok(())
}

impl FeData {
    pub fn plan(&self, s: C64, opts: &AfeOptions) -> Result<AfePlan> {
        check_s(s)?;
        opts.validate()?;
        let one = C64::new(1.0, 0.0);
        let v_s = WeightTable::get(self.gamma, s)?;
        let v_dual = WeightTable::get(self.gamma, one - s)?;
        let half_ln_q = 0.5 * self.conductor.ln();
        let ln_x = opts.split.ln();
        let ln_scale = (half_ln_q + ln_x, half_ln_q - ln_x);
        let len = |t: &WeightTable, ln_sc: f64| -> Result<usize> {
            let n = (t.ln_y_cutoff(opts.weight_eps) + ln_sc).exp() * opts.length_factor;
            if n > MAX_LENGTH {
                return Err(Error::Accuracy { achieved: f64::NAN, requested: opts.weight_eps });
            }
            Ok(n.floor() as usize)
        };
        let lengths = (len(&v_s, ln_scale.0)?, len(&v_dual, ln_scale.1)?);
        let ratio = self.root_number
            * ((0.5 - s) * self.conductor.ln() + self.gamma.ln_gamma(one - s)? - self.gamma.ln_gamma(s)?).exp();
        Ok(AfePlan { s, v_s, v_dual, ln_scale, lengths, ratio })
    }
}

impl AfePlan {
    pub fn max_length(&self) -> usize {
        self.lengths.0.max(self.lengths.1)
    }

    /// `sum a_n n^{-s} V_s(n / (X sqrt Q)) + ratio * sum b_n n^{s-1} V_{1-s}(n X / sqrt Q)`.
    pub fn eval(&self, a: impl Fn(usize) -> C64, b: impl Fn(usize) -> C64) -> C64 {
        let logs = ln_table(self.max_length());
        let mut first = C64::new(0.0, 0.0);
        for n in 1..=self.lengths.0 {
            let c = a(n);
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let l = logs[n];
            first += c * (-self.s * l).exp() * self.v_s.eval_ln(l - self.ln_scale.0);
        }
        let mut second = C64::new(0.0, 0.0);
        for n in 1..=self.lengths.1 {
            let c = b(n);
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let l = logs[n];
            second += c * ((self.s - 1.0) * l).exp() * self.v_dual.eval_ln(l - self.ln_scale.1);
        }
        first + self.ratio * second
    }
}

/// `ln n` for `0 <= n <= limit` (entry 0 is unused).
pub(crate) fn ln_table(limit: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<RwLock<Arc<Vec<f64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(Arc::new(Vec::new())));
    {
        let t = cache.read().expect("ln table poisoned");
        if t.len() > limit {
            return t.clone();
        }
    }
    let size = (limit + 1).max(1 << 12).next_power_of_two();
    let t: Vec<f64> = (0..size).map(|n| if n == 0 { 0.0 } else { (n as f64).ln() }).collect();
    let t = Arc::new(t);
    let mut w = cache.write().expect("ln table poisoned");
    if w.len() < t.len() {
        *w = t.clone();
    }
    w.clone()
}

/// A sieve covering at least `limit`, shared across calls.
pub(crate) fn shared_sieve(limit: usize) -> Arc<Sieve> {
    static CACHE: OnceLock<RwLock<Arc<Sieve>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(Arc::new(Sieve::new(1 << 12))));
    {
        let s = cache.read().expect("sieve poisoned");
        if s.limit() >= limit {
            return s.clone();
        }
    }
    let s = Arc::new(Sieve::new(limit.max(2).next_power_of_two()));
    let mut w = cache.write().expect("sieve poisoned");
    if w.limit() < s.limit() {
        *w = s.clone();
    }
    w.clone()
}

/// `chi_d(n)` for `0 <= n <= limit`.
pub(crate) fn kronecker_table(d: FundamentalDiscriminant, limit: usize) -> Vec<f64> {
    let mut out = vec![0.0; limit + 1];
    let sieve = shared_sieve(limit);
    let d = d.get() as i64;
    sieve.fill_completely_multiplicative(&mut out, 1.0, |p| crate::arith::kronecker(d, p as i64) as f64);
    out
}

/// One member of a supported family.
#[derive(Debug, Clone)]
pub enum LFunction {
    /// `L(s, chi)` for a primitive character (modulus 1 gives `zeta`).
    Dirichlet(DirichletCharacter),
    /// `L(s, chi_d)` (`d = 1` gives `zeta`).
    Quadratic(FundamentalDiscriminant),
    /// `L(s, f x chi_d)` for a level-1 eigenform.
    FormTwist(Arc<ModularForm>, FundamentalDiscriminant),
    /// `L(s, E_d)` with `gcd(d, N) = 1`.
    CurveTwist(Arc<EllipticCurve>, FundamentalDiscriminant),
    /// `L(s, sym^2 f)` for a source of squarefree level.
    Sym2(Arc<dyn HeckeSource>),
}

impl LFunction {
    pub fn label(&self) -> String {
        match self {
            LFunction::Dirichlet(chi) => format!("dirichlet[q={},{:?}]", chi.modulus(), chi.exponents()),
            LFunction::Quadratic(d) => format!("quadratic[d={}]", d.get()),
            LFunction::FormTwist(f, d) => format!("{}[d={}]", f.id(), d.get()),
            LFunction::CurveTwist(e, d) => format!("curve:{}[d={}]", e.label(), d.get()),
            LFunction::Sym2(f) => format!("sym2:{}", f.id()),
        }
    }

    fn is_zeta(&self) -> bool {
        match self {
            LFunction::Dirichlet(chi) => chi.modulus() == 1,
            LFunction::Quadratic(d) => d.get() == 1,
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LFunction::Dirichlet(chi) if !chi.is_primitive() => {
                Err(Error::NotPrimitive { modulus: chi.modulus(), conductor: chi.conductor() })
            }
            LFunction::CurveTwist(e, d) if crate::arith::gcd_u64(d.get(), e.conductor()) != 1 => Err(
                Error::InvalidInput(format!("twist d = {} is not coprime to N = {}", d.get(), e.conductor())),
            ),
            _ => Ok(()),
        }
    }

    /// `(gamma, Q, eps)`; `None` for `zeta`.
    pub fn fe_data(&self) -> Result<Option<FeData>> {
        self.validate()?;
        if self.is_zeta() {
            return Ok(None);
        }
        let fe = match self {
            LFunction::Dirichlet(chi) => FeData {
                gamma: if chi.is_even() { GammaFactor::Dirichlet } else { GammaFactor::DirichletOdd },
                conductor: chi.modulus() as f64,
                root_number: chi.root_number()?,
            },
            LFunction::Quadratic(d) => {
                FeData { gamma: GammaFactor::Dirichlet, conductor: d.get() as f64, root_number: C64::new(1.0, 0.0) }
            }
            LFunction::FormTwist(f, d) => FeData {
                gamma: GammaFactor::Shifted { twice_a: f.weight() - 1 },
                conductor: (d.get() as f64).powi(2),
                root_number: C64::new(if f.weight() % 4 == 0 { 1.0 } else { -1.0 }, 0.0),
            },
            LFunction::CurveTwist(e, d) => {
                let n = e.conductor();
                let sign = e.root_number() as i32 * d.chi(-(n as i64));
                FeData {
                    gamma: GammaFactor::Shifted { twice_a: 1 },
                    conductor: (d.get() as f64).powi(2) * n as f64,
                    root_number: C64::new(sign as f64, 0.0),
                }
            }
            LFunction::Sym2(f) => FeData {
                gamma: GammaFactor::Sym2 { nu: f.weight() - 1 },
                conductor: f.sym2_conductor()? as f64,
                root_number: C64::new(1.0, 0.0),
            },
        };
        Ok(Some(fe))
    }

    /// The object whose values at `1 - s` enter the functional equation.
    pub fn dual(&self) -> LFunction {
        match self {
            LFunction::Dirichlet(chi) => LFunction::Dirichlet(chi.conj()),
            other => other.clone(),
        }
    }

    /// `L(s)` with explicit options.
    pub fn eval_with(&self, s: C64, opts: &AfeOptions) -> Result<C64> {
        let Some(fe) = self.fe_data()? else {
            check_s(s)?;
            return zeta(s);
        };
        let plan = match fe.plan(s, opts) {
            Ok(p) => p,
            Err(Error::Pole { .. }) if s.im == 0.0 => return self.eval_across_pole(s, opts),
            Err(e) => return Err(e),
        };
        let len = plan.max_length();
        match self {
            LFunction::Dirichlet(chi) => {
                let v = chi.values();
                let q = v.len();
                Ok(plan.eval(|n| v[n % q], |n| v[n % q].conj()))
            }
            LFunction::Quadratic(d) => {
                let k = kronecker_table(*d, len);
                Ok(plan.eval(|n| C64::new(k[n], 0.0), |n| C64::new(k[n], 0.0)))
            }
            LFunction::FormTwist(f, d) => {
                let base = f.coefficients(len)?;
                twisted(&plan, &base, *d, len)
            }
            LFunction::CurveTwist(e, d) => {
                let base = e.coefficients(len)?;
                twisted(&plan, &base, *d, len)
            }
            LFunction::Sym2(f) => {
                let c = f.sym2_coefficients(len)?;
                Ok(plan.eval(|n| C64::new(c[n], 0.0), |n| C64::new(c[n], 0.0)))
            }
        }
    }

    /// `L(s)` at a real point where `gamma(1 - s)` has a pole (e.g. `s = 1`):
    /// Richardson extrapolation of symmetric averages off the real axis.
    fn eval_across_pole(&self, s: C64, opts: &AfeOptions) -> Result<C64> {
        let avg = |h: f64| -> Result<C64> {
            Ok((self.eval_with(s + C64::new(0.0, h), opts)? + self.eval_with(s - C64::new(0.0, h), opts)?) * 0.5)
        };
        let h = 2e-3;
        Ok((avg(h / 2.0)? * 4.0 - avg(h)?) / 3.0)
    }

    /// `L(s)` with default options.
    pub fn eval(&self, s: C64) -> Result<C64> {
        self.eval_with(s, &AfeOptions::default())
    }

    /// The right-hand side `(factor) * L(1 - s, dual)` of the functional
    /// equation, assembled from the chi-factors of [`chi_factor`] where one exists.
    pub fn fe_rhs(&self, s: C64, opts: &AfeOptions) -> Result<C64> {
        self.validate()?;
        let one = C64::new(1.0, 0.0);
        let dual = self.dual().eval_with(one - s, opts)?;
        let factor = match self {
            _ if self.is_zeta() => chi_factor(ChiFactorKind::Riemann, s)?,
            LFunction::Dirichlet(chi) => {
                let q = chi.modulus() as f64;
                let eps = chi.root_number()?;
                if chi.is_even() {
                    eps * rpow(q, 0.5 - s) * chi_factor(ChiFactorKind::Riemann, s)?
                } else {
                    // pi^{s - 1/2} Gamma((2 - s)/2) / Gamma((1 + s)/2)
                    let g = crate::specialfn::ln_gamma((2.0 - s) * 0.5)? - crate::specialfn::ln_gamma((1.0 + s) * 0.5)?;
                    eps * rpow(q, 0.5 - s) * (PI.ln() * (s - 0.5) + g).exp()
                }
            }
            LFunction::Quadratic(d) => rpow(d.get() as f64, 0.5 - s) * chi_factor(ChiFactorKind::Riemann, s)?,
            LFunction::FormTwist(f, d) => {
                rpow(d.get() as f64, 1.0 - 2.0 * s) * chi_factor(ChiFactorKind::Modular { weight: f.weight() }, s)?
            }
            LFunction::CurveTwist(e, d) => {
                let n = e.conductor();
                let kind = ChiFactorKind::Elliptic { conductor: n, root_number: e.root_number() };
                rpow(d.get() as f64, 1.0 - 2.0 * s) * d.chi(-(n as i64)) as f64 * chi_factor(kind, s)?
            }
            LFunction::Sym2(f) => {
                let gamma = GammaFactor::Sym2 { nu: f.weight() - 1 };
                let q = f.sym2_conductor()? as f64;
                (q.ln() * (0.5 - s) + gamma.ln_gamma(one - s)? - gamma.ln_gamma(s)?).exp()
            }
        };
        Ok(factor * dual)
    }
}

fn twisted(plan: &AfePlan, base: &[f64], d: FundamentalDiscriminant, len: usize) -> Result<C64> {
    let k = kronecker_table(d, len);
    let c: Vec<f64> = (0..=len).map(|n| base[n] * k[n]).collect();
    Ok(plan.eval(|n| C64::new(c[n], 0.0), |n| C64::new(c[n], 0.0)))
}

/// `x^e` for real `x > 0`.
pub(crate) fn rpow(x: f64, e: C64) -> C64 {
    (e * x.ln()).exp()
}

/// `L(s, chi)` for a primitive character.
pub fn l_dirichlet(chi: &DirichletCharacter, s: C64) -> Result<C64> {
    LFunction::Dirichlet(chi.clone()).eval(s)
}

/// `L(s, chi_d)`.
pub fn l_quadratic(d: FundamentalDiscriminant, s: C64) -> Result<C64> {
    LFunction::Quadratic(d).eval(s)
}

/// `L(s, f x chi_d)`.
pub fn l_twist_form(f: &Arc<ModularForm>, d: FundamentalDiscriminant, s: C64) -> Result<C64> {
    LFunction::FormTwist(f.clone(), d).eval(s)
}

/// `L(s, E_d)`.
pub fn l_twist_curve(e: &Arc<EllipticCurve>, d: FundamentalDiscriminant, s: C64) -> Result<C64> {
    LFunction::CurveTwist(e.clone(), d).eval(s)
}

/// `L(s, sym^2 f)`.
pub fn l_sym2(f: Arc<dyn HeckeSource>, s: C64) -> Result<C64> {
    LFunction::Sym2(f).eval(s)
}

/// Both sides of a functional equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeReport {
    pub s: C64,
    pub lhs: C64,
    pub rhs: C64,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Split used on the right-hand side so the two evaluations share no truncation.
pub const FE_CHECK_SPLIT: f64 = 1.25;

/// `L(s)` against `(chi-factor) L(1 - s, dual)`, the two sides computed with
/// different AFE splits.
pub fn fe_selfcheck(object: &LFunction, s: C64, tolerance: f64) -> Result<FeReport> {
    let lhs = object.eval(s)?;
    let rhs = object.fe_rhs(s, &AfeOptions::default().with_split(FE_CHECK_SPLIT))?;
    let defect = (lhs - rhs).norm();
    Ok(FeReport { s, lhs, rhs, defect, tolerance, pass: defect <= tolerance })
}
