//! Smoothed approximate-functional-equation weights
//! `V_s(y) = (1/2 pi i) int_(c) G(u) gamma(s+u)/gamma(s) y^{-u} du/u`
//! with `G(u) = exp(b u^2)`, tabulated on a log grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use super::chi::ChiFactorKind;
use super::gamma::ln_gamma;
use crate::error::Result;
use crate::C64;

/// Archimedean factor `gamma(s)` of a completed L-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GammaFactor {
    /// `pi^{-s/2} Gamma(s/2)`.
    Dirichlet,
    /// `pi^{-(s+1)/2} Gamma((s+1)/2)`: odd characters.
    DirichletOdd,
    /// `(2 pi)^{-s} Gamma(s + a)` with `a = twice_a / 2`.
    Shifted { twice_a: u32 },
    /// `pi^{-(s+1)/2} Gamma((s+1)/2) (2 pi)^{-s} Gamma(s + nu)`: symmetric square
    /// of a holomorphic form of weight `nu + 1`.
    Sym2 { nu: u32 },
}

impl GammaFactor {
    pub fn of_kind(kind: ChiFactorKind) -> Self {
        match kind {
            ChiFactorKind::Riemann => GammaFactor::Dirichlet,
            ChiFactorKind::Modular { weight } => GammaFactor::Shifted { twice_a: weight - 1 },
            ChiFactorKind::Elliptic { .. } => GammaFactor::Shifted { twice_a: 1 },
        }
    }

    pub fn ln_gamma(self, s: C64) -> Result<C64> {
        match self {
            GammaFactor::Dirichlet => Ok(-s * 0.5 * PI.ln() + ln_gamma(s * 0.5)?),
            GammaFactor::DirichletOdd => Ok(-(s + 1.0) * 0.5 * PI.ln() + ln_gamma((s + 1.0) * 0.5)?),
            GammaFactor::Shifted { twice_a } => {
                Ok(-s * (2.0 * PI).ln() + ln_gamma(s + twice_a as f64 / 2.0)?)
            }
            GammaFactor::Sym2 { nu } => Ok(-(s + 1.0) * 0.5 * PI.ln()
                + ln_gamma((s + 1.0) * 0.5)?
                - s * (2.0 * PI).ln()
                + ln_gamma(s + nu as f64)?),
        }
    }

    /// Real part of the rightmost pole of `gamma(s + u)` in `u`, relative to `-Re s`.
    fn pole_offset(self) -> f64 {
        match self {
            GammaFactor::Dirichlet => 0.0,
            GammaFactor::DirichletOdd => 1.0,
            GammaFactor::Shifted { twice_a } => twice_a as f64 / 2.0,
            GammaFactor::Sym2 { nu } => (nu as f64).min(1.0),
        }
    }

    /// Exponential decay rate of `|gamma(s + it)|` in `|t|`.
    fn decay_rate(self) -> f64 {
        match self {
            GammaFactor::Dirichlet | GammaFactor::DirichletOdd => PI / 4.0,
            GammaFactor::Shifted { .. } => PI / 2.0,
            GammaFactor::Sym2 { .. } => 3.0 * PI / 4.0,
        }
    }
}

const LN_Y_MIN: f64 = -14.0;
const LN_Y_CAP: f64 = 9.0;
const GRID_PER_UNIT: f64 = 512.0;
const NODE_STEP: f64 = 0.05;
/// Weights below this are treated as zero when choosing truncation points.
pub const WEIGHT_FLOOR: f64 = 1e-17;
/// Tolerated growth of the integrand over its value at the origin.
const GROWTH_ALLOWANCE: f64 = 4.6;

/// Tabulated `V_s` for one `(gamma factor, s)` pair.
#[derive(Debug)]
pub struct WeightTable {
    s: C64,
    gamma: GammaFactor,
    regulator: f64,
    nodes: Vec<(C64, C64)>,
    values: Vec<C64>,
    derivs: Vec<C64>,
    curvs: Vec<C64>,
    ln_y_max: f64,
}

impl WeightTable {
    fn build(gamma: GammaFactor, s: C64) -> Result<Self> {
        let t = s.im.abs();
        let regulator = if t > 0.0 { (gamma.decay_rate() * t - GROWTH_ALLOWANCE).max(0.0) / (t * t) } else { 0.0 };
        let c = (-s.re - gamma.pole_offset()).max(0.0) + 0.5;
        let lg_s = gamma.ln_gamma(s)?;
        let node = |k: i64| -> Result<(C64, C64)> {
            let u = C64::new(c, k as f64 * NODE_STEP);
            let w = (gamma.ln_gamma(s + u)? - lg_s + u * u * regulator).exp() / u * (NODE_STEP / (2.0 * PI));
            Ok((u, w))
        };
        let mut nodes = vec![node(0)?];
        let mut peak = nodes[0].1.norm();
        for dir in [1i64, -1] {
            let mut k = dir;
            loop {
                let (u, w) = node(k)?;
                peak = peak.max(w.norm());
                nodes.push((u, w));
                if (k.unsigned_abs() as f64 * NODE_STEP > t + 5.0 && w.norm() < 1e-20 * peak)
                    || k.unsigned_abs() > 400_000
                {
                    break;
                }
                k += dir;
            }
        }
        let mut table = WeightTable {
            s,
            gamma,
            regulator,
            nodes,
            values: Vec::new(),
            derivs: Vec::new(),
            curvs: Vec::new(),
            ln_y_max: LN_Y_CAP,
        };
        table.fill_grid();
        Ok(table)
    }

    fn fill_grid(&mut self) {
        let step = 1.0 / GRID_PER_UNIT;
        let total = ((LN_Y_CAP - LN_Y_MIN) * GRID_PER_UNIT) as usize + 1;
        let mut powers: Vec<C64> = Vec::new();
        let ratios: Vec<C64> = self.nodes.iter().map(|(u, _)| (-u * step).exp()).collect();
        let mut quiet = 0usize;
        for j in 0..total {
            let x = LN_Y_MIN + j as f64 * step;
            if j % 16 == 0 {
                powers = self.nodes.iter().map(|(u, w)| w * (-u * x).exp()).collect();
            } else {
                for (p, r) in powers.iter_mut().zip(&ratios) {
                    *p *= r;
                }
            }
            let mut v = C64::new(0.0, 0.0);
            let mut d = C64::new(0.0, 0.0);
            let mut dd = C64::new(0.0, 0.0);
            for (p, (u, _)) in powers.iter().zip(&self.nodes) {
                let pu = p * u;
                v += p;
                d -= pu;
                dd += pu * u;
            }
            self.values.push(v);
            self.derivs.push(d);
            self.curvs.push(dd);
            if x > 0.0 && v.norm() < WEIGHT_FLOOR && d.norm() < WEIGHT_FLOOR {
                quiet += 1;
                if quiet >= 64 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let last_loud = self
            .values
            .iter()
            .zip(&self.derivs)
            .rposition(|(v, d)| v.norm() >= WEIGHT_FLOOR || d.norm() >= WEIGHT_FLOOR)
            .unwrap_or(0);
        self.ln_y_max = LN_Y_MIN + (last_loud + 1) as f64 * step;
    }

    /// Cached table for `(gamma, s)`.
    pub fn get(gamma: GammaFactor, s: C64) -> Result<Arc<WeightTable>> {
        type Key = (GammaFactor, u64, u64);
        static CACHE: OnceLock<RwLock<HashMap<Key, Arc<WeightTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        let key = (gamma, s.re.to_bits(), s.im.to_bits());
        if let Some(t) = cache.read().expect("cache poisoned").get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(WeightTable::build(gamma, s)?);
        let mut w = cache.write().expect("cache poisoned");
        if w.len() > 512 {
            w.clear();
        }
        Ok(w.entry(key).or_insert(t).clone())
    }

    pub fn shift(&self) -> C64 {
        self.s
    }

    pub fn gamma(&self) -> GammaFactor {
        self.gamma
    }

    /// Coefficient `b` of the regulator `exp(b u^2)`.
    pub fn regulator(&self) -> f64 {
        self.regulator
    }

    /// Beyond `exp(ln_y_max)` the weight is below [`WEIGHT_FLOOR`].
    pub fn y_max(&self) -> f64 {
        self.ln_y_max.exp()
    }

    /// Smallest `ln y` beyond which the tabulated `|V_s|` and `|V_s'|` stay below `eps`.
    pub fn ln_y_cutoff(&self, eps: f64) -> f64 {
        let step = 1.0 / GRID_PER_UNIT;
        let last = self
            .values
            .iter()
            .zip(&self.derivs)
            .rposition(|(v, d)| v.norm() >= eps || d.norm() >= eps)
            .unwrap_or(0);
        (LN_Y_MIN + (last + 1) as f64 * step).min(self.ln_y_max)
    }

    /// Direct evaluation from the quadrature nodes (no interpolation).
    pub fn eval_direct(&self, ln_y: f64) -> C64 {
        self.nodes.iter().map(|(u, w)| w * (-u * ln_y).exp()).sum()
    }

    /// `V_s(e^{ln_y})`.
    #[inline]
    pub fn eval_ln(&self, ln_y: f64) -> C64 {
        if ln_y >= self.ln_y_max {
            return C64::new(0.0, 0.0);
        }
        if ln_y < LN_Y_MIN {
            return self.eval_direct(ln_y);
        }
        let pos = (ln_y - LN_Y_MIN) * GRID_PER_UNIT;
        let j = (pos as usize).min(self.values.len().saturating_sub(2));
        let t = pos - j as f64;
        let h = 1.0 / GRID_PER_UNIT;
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        let (d0, d1) = (self.derivs[j] * h, self.derivs[j + 1] * h);
        let (c0, c1) = (self.curvs[j] * (h * h), self.curvs[j + 1] * (h * h));
        // Quintic Hermite.
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let s5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        v0 * (1.0 - s5)
            + v1 * s5
            + d0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
            + d1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
            + c0 * (0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5))
            + c1 * (0.5 * (t3 - 2.0 * t4 + t5))
    }

    pub fn eval(&self, y: f64) -> C64 {
        self.eval_ln(y.ln())
    }
}

/// `V(x)` for the gamma factor of `kind` at shift `s`.
pub fn afe_weight(x: f64, s: C64, kind: ChiFactorKind) -> Result<C64> {
    if !(x > 0.0) {
        return Err(crate::Error::InvalidInput(format!("afe weight needs x > 0, got {x}")));
    }
    Ok(WeightTable::get(GammaFactor::of_kind(kind), s)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_incomplete_gamma_ratio(a: f64, x: f64) -> f64 {
        // Q(a, x) by continued fraction (x > a + 1) or series.
        let lg = crate::specialfn::ln_gamma(C64::new(a, 0.0)).unwrap().re;
        if x < a + 1.0 {
            let mut sum = 1.0 / a;
            let mut term = sum;
            for n in 1..500 {
                term *= x / (a + n as f64);
                sum += term;
            }
            1.0 - sum * (-x + a * x.ln() - lg).exp()
        } else {
            let mut b = x + 1.0 - a;
            let mut c = 1e300;
            let mut d = 1.0 / b;
            let mut h = d;
            for i in 1..500 {
                let an = -(i as f64) * (i as f64 - a);
                b += 2.0;
                d = 1.0 / (an * d + b);
                c = b + an / c;
                h *= d * c;
            }
            h * (-x + a * x.ln() - lg).exp()
        }
    }

    #[test]
    fn matches_incomplete_gamma_without_regulator() {
        // For real s and b = 0, V_s(y) = Q(s/2, pi y^2) (Dirichlet) and Q(s + a, 2 pi y) (shifted).
        for s in [0.3, 0.5, 0.75, 1.4] {
            let t = WeightTable::get(GammaFactor::Dirichlet, C64::new(s, 0.0)).unwrap();
            assert_eq!(t.regulator(), 0.0);
            for y in [0.01, 0.1, 0.5, 1.0, 1.7, 3.0] {
                let exact = upper_incomplete_gamma_ratio(s / 2.0, PI * y * y);
                assert!((t.eval(y) - exact).norm() < 1e-12, "s={s} y={y} {} {exact}", t.eval(y));
            }
            let t = WeightTable::get(GammaFactor::Shifted { twice_a: 1 }, C64::new(s, 0.0)).unwrap();
            for y in [0.01, 0.3, 1.0, 4.0] {
                let exact = upper_incomplete_gamma_ratio(s + 0.5, 2.0 * PI * y);
                assert!((t.eval(y) - exact).norm() < 1e-12, "s={s} y={y} {} {exact}", t.eval(y));
            }
        }
    }

    #[test]
    fn limits_and_envelope() {
        let kind = ChiFactorKind::Elliptic { conductor: 11, root_number: 1 };
        for s in [C64::new(0.5, 0.0), C64::new(0.6, 3.0)] {
            assert!((afe_weight(1e-8, s, kind).unwrap() - 1.0).norm() < 1e-6);
            assert!(afe_weight(1e3, s, kind).unwrap().norm() < 1e-10);
            assert!(afe_weight(1e3, s, ChiFactorKind::Riemann).unwrap().norm() < 1e-10);
        }
        for s in [0.5, 0.7, 0.3] {
            for i in 0..=90 {
                let x = 10f64.powf(-6.0 + 0.1 * i as f64);
                for kind in [ChiFactorKind::Riemann, kind, ChiFactorKind::Modular { weight: 12 }] {
                    assert!(afe_weight(x, C64::new(s, 0.0), kind).unwrap().norm() <= 1.01);
                }
            }
        }
        assert!(afe_weight(0.0, C64::new(0.5, 0.0), kind).is_err());
    }

    #[test]
    fn interpolation_matches_direct() {
        for s in [C64::new(0.5, 0.0), C64::new(0.7, 12.0), C64::new(0.2, -19.0)] {
            for gamma in [GammaFactor::Dirichlet, GammaFactor::Shifted { twice_a: 11 }] {
                let t = WeightTable::get(gamma, s).unwrap();
                for i in 0..200 {
                    let x = -10.0 + 0.0731 * i as f64;
                    let (a, b) = (t.eval_ln(x), t.eval_direct(x));
                    assert!((a - b).norm() < 1e-11, "{gamma:?} {s} {x} {a} {b}");
                }
            }
        }
    }
}
