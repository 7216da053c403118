use serde::Serialize;
use serde_json::{json, Value};

use qmoments::arith::fundamental_discriminants_in;
use qmoments::characters::enumerate_even_primitive;
use qmoments::coeffs::{CoefficientCache, EllipticCurve, HeckeSource};
use qmoments::lvalues::{fe_selfcheck, LFunction};
use qmoments::mds::{empirical_residue, funceq_check, perron_check, PerronOptions};
use qmoments::moments::{appendix_experiment, compare, AppendixReport, CompareReport, Manifest, MomentRun, TermSelection, Verdict};
use qmoments::predict::{Family, FamilyKind, Prediction, RecipeMode};
use qmoments::C64;

use crate::config::RunConfig;
use crate::error::CliError;

/// What a command produced: the JSON report, an optional CSV table and, for
/// `verify`, whether the check passed.
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
    pub pass: Option<bool>,
}

fn manifest(cfg: &RunConfig, command: &str) -> (Value, String) {
    let m = Manifest::new(command, cfg.manifest_parameters());
    let hash = m.hash();
    (serde_json::to_value(&m).expect("manifest serializes"), hash)
}

fn report(cfg: &RunConfig, command: &str, body: impl Serialize, pass: Option<bool>) -> Output {
    let (m, hash) = manifest(cfg, command);
    let mut json = json!({ "manifest": m, "manifest_hash": hash, "report": body });
    if let Some(p) = pass {
        json["pass"] = json!(p);
    }
    Output { json, csv: None, pass }
}

/// Real part alone when the imaginary part is negligible, else `re+imi`.
fn fmt_c(z: C64) -> String {
    if z.im.abs() <= 1e-12 * z.re.abs() {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn csv_text(hash: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(format!("# manifest {hash}\n").into_bytes());
    w.write_record(header).map_err(|e| CliError::Io(e.into()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn moment_csv(hash: &str, kind: FamilyKind, rep: &CompareReport) -> Result<String, CliError> {
    let header = ["scale", "empirical_re", "empirical_im", "term_mask", "term_value", "cumulative", "ratio", "residual"];
    let join = |v: Vec<String>| v.join(";");
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            let masks = r
                .term_masks
                .iter()
                .map(|&(j, h)| if kind == FamilyKind::Unitary { format!("{j}:{h}") } else { j.to_string() })
                .collect();
            vec![
                r.scale.to_string(),
                r.empirical.re.to_string(),
                r.empirical.im.to_string(),
                join(masks),
                join(r.term_values.iter().map(|&z| fmt_c(z)).collect()),
                join(r.cumulative.iter().map(|&z| fmt_c(z)).collect()),
                fmt_c(r.ratio),
                fmt_c(r.residual),
            ]
        })
        .collect();
    csv_text(hash, &header, rows)
}

pub fn moment(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let shifts = cfg.shifts(kind, "0.6")?;
    let twist = cfg.twist(kind)?;
    let grid = cfg.grid("1e3:1e4:geometric:4")?;
    let run = MomentRun::compute(&family, &shifts, twist, &grid, &cfg.test_function()?, cfg.mode()?, cfg.afe()?, &cfg.euler()?)?;
    let all = compare(&run, TermSelection::All);
    let one = compare(&run, TermSelection::UpToSwaps(0));
    let (m, hash) = manifest(cfg, "moment");
    let csv = moment_csv(&hash, kind, &all)?;
    let json = json!({ "manifest": m, "manifest_hash": hash, "run": run, "comparison": all, "one_term": one });
    Ok(Output { json, csv: Some(csv), pass: None })
}

pub fn predict(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let shifts = cfg.shifts(kind, "0.6")?;
    let twist = cfg.twist(kind)?;
    let scale = cfg.f64_or("scale", 1e4)?;
    let p = Prediction::new(&family, &shifts, twist, &cfg.test_function()?, cfg.mode()?, &cfg.euler()?)?;
    let terms = p.at(scale);
    let body = json!({
        "family": p.family,
        "mode": p.mode,
        "scale": scale,
        "term_count": terms.len(),
        "terms": terms,
        "total": p.total(scale),
        "notes": p.notes,
    });
    Ok(report(cfg, "predict", body, None))
}

#[derive(Serialize)]
struct FeRow {
    object: String,
    s: C64,
    defect: f64,
    pass: bool,
}

pub fn verify_fe(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let tol = cfg.f64_or("tol", 1e-8)?;
    let mut objects = Vec::new();
    let points = if kind == FamilyKind::Unitary {
        let qmax = cfg.u64_or("qmax", 50)?;
        for q in 1..=qmax {
            objects.extend(enumerate_even_primitive(q)?.into_iter().map(LFunction::Dirichlet));
        }
        cfg.shifts(FamilyKind::Symplectic, "0.5,0.5+0.3i,0.7")?.s
    } else {
        let dmax = cfg.u64_or("dmax", 100)?;
        let ds = fundamental_discriminants_in(1, dmax, family.level());
        objects.extend(ds.into_iter().map(|d| match &family {
            Family::Orthogonal(f) => LFunction::FormTwist(f.clone(), d),
            Family::Elliptic(e) => LFunction::CurveTwist(e.clone(), d),
            _ => LFunction::Quadratic(d),
        }));
        cfg.shifts(kind, "0.6")?.s
    };
    let mut rows = Vec::new();
    for f in &objects {
        for &s in &points {
            let r = fe_selfcheck(f, s, tol)?;
            rows.push(FeRow { object: f.label(), s, defect: r.defect, pass: r.pass });
        }
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    let max_defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    let pass = failures == 0;
    let body = json!({ "checks": rows.len(), "failures": failures, "max_defect": max_defect, "tolerance": tol, "rows": rows });
    Ok(report(cfg, "verify fe", body, Some(pass)))
}

pub fn verify_residue(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let shifts = cfg.shifts(kind, "0.75")?;
    let twist = cfg.twist(kind)?;
    let dmax = cfg.u64_or("dmax", if kind == FamilyKind::Unitary { 300 } else { 100_000 })?;
    let tol = cfg.f64_or("tol", 0.05)?;
    let est = empirical_residue(&family, &shifts, twist, dmax, cfg.afe()?)?;
    let p = Prediction::new(&family, &shifts, twist, &qmoments::specialfn::TestFunction::canonical(), RecipeMode::Modified, &cfg.euler()?)?;
    let factor = p
        .terms
        .iter()
        .find(|t| t.symbolic.j_mask == 0 && t.symbolic.h_mask == 0)
        .map(|t| t.factor)
        .ok_or_else(|| CliError::Config("no J = {} term".into()))?;
    let rel = (est.extrapolated / factor - 1.0).norm();
    let pass = est.converged && rel <= tol;
    let body = json!({ "estimate": est, "factor": factor, "relative_error": rel, "tolerance": tol });
    Ok(report(cfg, "verify residue", body, Some(pass)))
}

fn complex(cfg: &RunConfig, key: &str, default: &str) -> Result<C64, CliError> {
    let v = cfg.str_or(key, default);
    v.parse().map_err(|_| CliError::Config(format!("{key} = '{v}': not a complex number")))
}

pub fn verify_funceq(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let unitary = kind == FamilyKind::Unitary;
    let shifts = cfg.shifts(kind, "0.6")?;
    let twist = cfg.twist(kind)?;
    let j = cfg.u64_or("j", 1)? as u32;
    let h = cfg.u64_or("h", if unitary { 1 } else { 0 })? as u32;
    let w = complex(cfg, "w", if unitary { "2.4" } else { "1.4" })?;
    let cutoff = cfg.u64_or("cutoff", 1000)?;
    let tol = cfg.f64_or("tol", qmoments::mds::FUNCEQ_TOL)?;
    let r = funceq_check(&family, &shifts, twist, j, h, w, cutoff, cfg.afe()?)?;
    let pass = r.defect <= tol;
    Ok(report(cfg, "verify funceq", json!({ "check": r, "tolerance": tol }), Some(pass)))
}

pub fn verify_perron(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.family()?;
    let kind = family.kind();
    let shifts = cfg.shifts(kind, "0.75")?;
    let twist = cfg.twist(kind)?;
    let d = PerronOptions::default();
    let quad = PerronOptions { step: cfg.f64_or("step", d.step)?, t_max: cfg.f64_or("t_max", d.t_max)? };
    let r = perron_check(
        &family,
        &shifts,
        twist,
        cfg.f64_or("scale", 1e3)?,
        &cfg.test_function()?,
        cfg.f64_or("c", 2.5)?,
        cfg.u64_or("cutoff", 8000)?,
        quad,
        cfg.afe()?,
    )?;
    let tol = cfg.f64_or("tol", 5e-3)?;
    let pass = r.defect < tol;
    Ok(report(cfg, "verify perron", json!({ "check": r, "tolerance": tol }), Some(pass)))
}

fn appendix_csv(hash: &str, rep: &AppendixReport) -> Result<String, CliError> {
    let header = ["scale", "empirical", "one_term", "two_term", "residual_one", "residual_two", "relative_two"];
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            [r.scale, r.empirical, r.one_term, r.two_term, r.residual_one, r.residual_two, r.relative_two]
                .iter()
                .map(|x| x.to_string())
                .collect()
        })
        .collect();
    csv_text(hash, &header, rows)
}

pub fn verify_appendix(cfg: &RunConfig) -> Result<Output, CliError> {
    let curve = cfg.curve()?;
    let m = cfg.u64_or("M", 1)?;
    let alpha = cfg.f64_or("alpha", 0.1)?;
    let grid = cfg.grid("2e3,5e3,1e4,2e4")?;
    let rep = appendix_experiment(curve, m, alpha, &grid, &cfg.test_function()?, cfg.afe()?, &cfg.euler()?)?;
    let pass = rep.verdict == Verdict::TwoTermBetter;
    let mut out = report(cfg, "verify appendix", &rep, Some(pass));
    out.csv = Some(appendix_csv(out.json["manifest_hash"].as_str().expect("hash"), &rep)?);
    Ok(out)
}

fn require_cache(cfg: &RunConfig) -> Result<CoefficientCache, CliError> {
    cfg.cache()?.ok_or_else(|| CliError::Config("cache commands need cache_dir".into()))
}

#[derive(Serialize)]
struct Coverage {
    object_hash: String,
    ranges: Vec<(u64, u64)>,
}

pub fn cache_build(cfg: &RunConfig) -> Result<Output, CliError> {
    let cache = require_cache(cfg)?;
    let spec = cfg.str_or("curve", "11a1");
    // Without the cache attached, so only the requested range is stored.
    let plain = RunConfig::new([("curve".to_string(), spec)].into_iter().collect());
    let curve: std::sync::Arc<EllipticCurve> = plain.curve()?;
    let start = cfg.u64_or("start", 1)?;
    let end = cfg.u64_or("end", 100_000)?;
    if start == 0 || end < start {
        return Err(CliError::Config(format!("need 1 <= start <= end, got {start}..{end}")));
    }
    let dense = curve.coefficients(end as usize)?;
    let path = cache.store(&curve.id(), start, &dense[start as usize..=end as usize])?;
    let entry = cache.stat()?.into_iter().find(|e| e.path == path).expect("stored block is listed");
    let body = json!({ "curve": curve.label(), "object_id": curve.id(), "block": entry });
    Ok(report(cfg, "cache build", body, None))
}

pub fn cache_stat(cfg: &RunConfig) -> Result<Output, CliError> {
    let cache = require_cache(cfg)?;
    let entries = cache.stat()?;
    let coverage: Vec<Coverage> = cache
        .coverage()?
        .into_iter()
        .map(|(h, ranges)| Coverage { object_hash: format!("{h:016x}"), ranges })
        .collect();
    Ok(report(cfg, "cache stat", json!({ "entries": entries, "coverage": coverage }), None))
}

pub fn cache_purge(cfg: &RunConfig) -> Result<Output, CliError> {
    let cache = require_cache(cfg)?;
    let removed = cache.purge()?;
    Ok(report(cfg, "cache purge", json!({ "removed": removed }), None))
}
