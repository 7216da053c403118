//! Flat `key = value` configuration, merged with command-line flags.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use qmoments::coeffs::{CoefficientCache, EllipticCurve, ModularForm};
use qmoments::lvalues::AfeOptions;
use qmoments::predict::{EulerOptions, Family, FamilyKind, RecipeMode, ShiftSet, Twist};
use qmoments::specialfn::TestFunction;
use qmoments::C64;

use crate::error::CliError;

/// Every accepted key, for both the file and the flags.
pub const KEYS: &[&str] = &[
    "family", "k", "shift", "zshift", "M", "N", "xgrid", "scale", "mode", "curve", "form", "g", "prime_limit",
    "weight_eps", "length_factor", "split", "cache_dir", "threads", "out", "qmax", "dmax", "cutoff", "w", "j", "h",
    "c", "alpha", "step", "t_max", "tol", "start", "end",
];

/// Keys that do not change any computed number and stay out of the manifest.
const OUTPUT_ONLY: &[&str] = &["cache_dir", "threads", "out"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
        };
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_file(&text)
}

/// The effective configuration. Every value read through it is recorded for
/// the manifest, defaults included.
#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeMap<String, String>>,
}

fn bad(key: &str, v: &str, what: &str) -> CliError {
    CliError::Config(format!("{key} = '{v}': {what}"))
}

impl RunConfig {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        RunConfig { values, used: RefCell::new(BTreeMap::new()) }
    }

    fn record(&self, key: &str, v: &str) {
        if !OUTPUT_ONLY.contains(&key) {
            self.used.borrow_mut().insert(key.to_string(), v.to_string());
        }
    }

    pub fn opt(&self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned();
        if let Some(v) = &v {
            self.record(key, v);
        }
        v
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        let v = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.record(key, &v);
        v
    }

    pub fn require(&self, key: &str) -> Result<String, CliError> {
        self.opt(key).ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.str_or(key, &default.to_string());
        let x: f64 = v.parse().map_err(|_| bad(key, &v, "not a number"))?;
        if !x.is_finite() {
            return Err(bad(key, &v, "not finite"));
        }
        Ok(x)
    }

    /// Integers may be written as `1e5`.
    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = self.str_or(key, &default.to_string());
        parse_u64(&v).ok_or_else(|| bad(key, &v, "not a non-negative integer"))
    }

    pub fn manifest_parameters(&self) -> Vec<(String, String)> {
        self.used.borrow().iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn threads(&self) -> Result<Option<usize>, CliError> {
        match self.values.get("threads") {
            None => Ok(None),
            Some(v) => match parse_u64(v) {
                Some(n) if n > 0 => Ok(Some(n as usize)),
                _ => Err(bad("threads", v, "expected a positive integer")),
            },
        }
    }

    pub fn out(&self) -> Option<String> {
        self.values.get("out").cloned()
    }

    pub fn cache(&self) -> Result<Option<CoefficientCache>, CliError> {
        match self.values.get("cache_dir") {
            None => Ok(None),
            Some(d) => Ok(Some(CoefficientCache::new(d)?)),
        }
    }

    pub fn curve(&self) -> Result<Arc<EllipticCurve>, CliError> {
        let spec = self.str_or("curve", "11a1");
        let curve = if spec == "11a1" { EllipticCurve::c11a1() } else { curve_from_file(Path::new(&spec))? };
        Ok(Arc::new(match self.cache()? {
            Some(c) => curve.with_cache(c),
            None => curve,
        }))
    }

    pub fn form(&self) -> Result<Arc<ModularForm>, CliError> {
        let spec = self.str_or("form", "delta");
        Ok(Arc::new(if spec == "delta" { ModularForm::delta() } else { form_from_file(Path::new(&spec))? }))
    }

    pub fn family(&self) -> Result<Family, CliError> {
        let name = self.require("family")?;
        Ok(match name.as_str() {
            "unitary" => Family::Unitary,
            "symplectic" => Family::Symplectic,
            "orthogonal" => Family::Orthogonal(self.form()?),
            "elliptic" => Family::Elliptic(self.curve()?),
            other => return Err(bad("family", other, "expected unitary, symplectic, orthogonal or elliptic")),
        })
    }

    pub fn mode(&self) -> Result<RecipeMode, CliError> {
        let v = self.str_or("mode", "modified");
        match v.as_str() {
            "modified" => Ok(RecipeMode::Modified),
            "unmodified" => Ok(RecipeMode::Unmodified),
            _ => Err(bad("mode", &v, "expected modified or unmodified")),
        }
    }

    /// Shifts with defaults for the given kind; `k`, when given, must match.
    pub fn shifts(&self, kind: FamilyKind, default: &str) -> Result<ShiftSet, CliError> {
        let s = parse_complex_list("shift", &self.str_or("shift", default))?;
        let z = if kind == FamilyKind::Unitary {
            let zs = self.str_or("zshift", &self.values.get("shift").cloned().unwrap_or_else(|| default.to_string()));
            parse_complex_list("zshift", &zs)?
        } else {
            if self.values.contains_key("zshift") {
                return Err(CliError::Config("zshift only applies to the unitary family".into()));
            }
            Vec::new()
        };
        if let Some(k) = self.opt("k") {
            let k = parse_u64(&k).ok_or_else(|| bad("k", &k, "not an integer"))?;
            if k as usize != s.len() {
                return Err(CliError::Config(format!("k = {k} but {} shifts given", s.len())));
            }
        }
        Ok(ShiftSet::unitary(s, z)?)
    }

    pub fn twist(&self, kind: FamilyKind) -> Result<Twist, CliError> {
        let m = self.u64_or("M", 1)?;
        let n = if kind == FamilyKind::Unitary { self.u64_or("N", 1)? } else { 1 };
        if kind != FamilyKind::Unitary && self.values.contains_key("N") {
            return Err(CliError::Config("N only applies to the unitary family".into()));
        }
        Ok(Twist::new(m, n)?)
    }

    pub fn test_function(&self) -> Result<TestFunction, CliError> {
        let v = self.str_or("g", "bump:1:2");
        parse_test_function(&v).map_err(|why| bad("g", &v, &why))
    }

    pub fn afe(&self) -> Result<AfeOptions, CliError> {
        let d = AfeOptions::default();
        Ok(AfeOptions {
            split: self.f64_or("split", d.split)?,
            length_factor: self.f64_or("length_factor", d.length_factor)?,
            weight_eps: self.f64_or("weight_eps", d.weight_eps)?,
        })
    }

    pub fn euler(&self) -> Result<EulerOptions, CliError> {
        Ok(EulerOptions { prime_limit: self.u64_or("prime_limit", EulerOptions::default().prime_limit)? })
    }

    /// `lo:hi:geometric:n`, `lo:hi:linear:n` or a comma list.
    pub fn grid(&self, default: &str) -> Result<Vec<f64>, CliError> {
        let v = self.str_or("xgrid", default);
        parse_grid(&v).map_err(|why| bad("xgrid", &v, &why))
    }
}

pub fn parse_u64(v: &str) -> Option<u64> {
    if let Ok(n) = v.parse::<u64>() {
        return Some(n);
    }
    let x: f64 = v.parse().ok()?;
    (x >= 0.0 && x.fract() == 0.0 && x < 1.8e19).then_some(x as u64)
}

fn parse_complex_list(key: &str, v: &str) -> Result<Vec<C64>, CliError> {
    v.split(',')
        .map(|p| {
            let p = p.trim();
            C64::from_str(p).map_err(|_| bad(key, p, "not a complex number (e.g. 0.6 or 0.5+0.3i)"))
        })
        .collect()
}

pub fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
    let grid = match parts.as_slice() {
        [lo, hi, kind, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n = parse_u64(n).filter(|&n| n >= 1).ok_or("point count must be a positive integer")? as usize;
            if !(lo > 0.0 && hi >= lo) {
                return Err("need 0 < lo <= hi".into());
            }
            let t = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            match *kind {
                "geometric" => (0..n).map(|i| lo * (hi / lo).powf(t(i))).collect(),
                "linear" => (0..n).map(|i| lo + (hi - lo) * t(i)).collect(),
                other => return Err(format!("unknown spacing '{other}'")),
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err("expected lo:hi:geometric:n or a comma list".into()),
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    Ok(grid)
}

/// `bump:a:b`, optionally combined as `2*bump:1:2+-1*bump:1.5:3`.
pub fn parse_test_function(v: &str) -> Result<TestFunction, String> {
    let term = |t: &str| -> Result<(f64, TestFunction), String> {
        let (coef, body) = match t.split_once('*') {
            Some((c, b)) => (c.trim().parse::<f64>().map_err(|_| format!("bad coefficient '{c}'"))?, b),
            None => (1.0, t),
        };
        let p: Vec<&str> = body.trim().split(':').collect();
        match p.as_slice() {
            ["bump", a, b] => {
                let a: f64 = a.parse().map_err(|_| format!("bad endpoint '{a}'"))?;
                let b: f64 = b.parse().map_err(|_| format!("bad endpoint '{b}'"))?;
                Ok((coef, TestFunction::bump(a, b).map_err(|e| e.to_string())?))
            }
            _ => Err(format!("expected bump:a:b, got '{body}'")),
        }
    };
    // Split on '+' that is not part of an exponent or a sign after '*'.
    let mut terms = Vec::new();
    let mut cur = String::new();
    let mut prev = ' ';
    for ch in v.chars() {
        if ch == '+' && !matches!(prev, 'e' | 'E' | '*') && !cur.is_empty() {
            terms.push(term(&cur)?);
            cur.clear();
        } else {
            cur.push(ch);
        }
        prev = ch;
    }
    terms.push(term(&cur)?);
    if terms.len() == 1 && terms[0].0 == 1.0 {
        return Ok(terms.pop().expect("one term").1);
    }
    TestFunction::combination(terms).map_err(|e| e.to_string())
}

fn ints(key: &str, v: &str) -> Result<Vec<i64>, CliError> {
    v.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| bad(key, x, "not an integer"))).collect()
}

/// Curve file: `label`, `a = a1,a2,a3,a4,a6`, `conductor`, `root_number`,
/// `bad = p:a_p,...`.
fn curve_from_file(path: &Path) -> Result<EllipticCurve, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("curve file {}: {e}", path.display())))?;
    let map = raw_pairs(&text)?;
    let get = |k: &str| map.get(k).ok_or_else(|| CliError::Config(format!("curve file: missing '{k}'")));
    let a: [i64; 5] = ints("a", get("a")?)?
        .try_into()
        .map_err(|_| CliError::Config("curve file: 'a' needs five integers".into()))?;
    let conductor = parse_u64(get("conductor")?).ok_or_else(|| CliError::Config("curve file: bad conductor".into()))?;
    let eps: i8 = get("root_number")?.parse().map_err(|_| CliError::Config("curve file: bad root_number".into()))?;
    let mut bad_primes = Vec::new();
    for pair in get("bad")?.split(',') {
        let (p, ap) = pair.split_once(':').ok_or_else(|| CliError::Config(format!("curve file: bad entry '{pair}'")))?;
        let p = parse_u64(p.trim()).ok_or_else(|| CliError::Config(format!("curve file: bad prime '{p}'")))?;
        let ap: i8 = ap.trim().parse().map_err(|_| CliError::Config(format!("curve file: bad a_p '{ap}'")))?;
        bad_primes.push((p, ap));
    }
    let label = map.get("label").cloned().unwrap_or_else(|| path.display().to_string());
    let curve = EllipticCurve::new(&label, a, conductor, eps, &bad_primes)?;
    curve.verify_bad_primes()?;
    Ok(curve)
}

/// Form file: `label`, `weight`, `normalized = true|false`, `a = p:a_p,...`.
fn form_from_file(path: &Path) -> Result<ModularForm, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("form file {}: {e}", path.display())))?;
    let map = raw_pairs(&text)?;
    let get = |k: &str| map.get(k).ok_or_else(|| CliError::Config(format!("form file: missing '{k}'")));
    let weight: u32 = get("weight")?.parse().map_err(|_| CliError::Config("form file: bad weight".into()))?;
    let normalized = map.get("normalized").map(|v| v == "true").unwrap_or(false);
    let mut table = Vec::new();
    for pair in get("a")?.split(',') {
        let (p, a) = pair.split_once(':').ok_or_else(|| CliError::Config(format!("form file: bad entry '{pair}'")))?;
        let p = parse_u64(p.trim()).ok_or_else(|| CliError::Config(format!("form file: bad prime '{p}'")))?;
        let a: f64 = a.trim().parse().map_err(|_| CliError::Config(format!("form file: bad coefficient '{a}'")))?;
        table.push((p, a));
    }
    let label = map.get("label").cloned().unwrap_or_else(|| path.display().to_string());
    Ok(ModularForm::from_prime_table(weight, &label, &table, normalized)?)
}

fn raw_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("expected key = value: '{line}'")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
