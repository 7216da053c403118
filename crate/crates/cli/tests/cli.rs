use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmoments"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn moment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["moment", "--family", "symplectic", "--k", "1", "--shift", "0.6", "--M", "1", "--xgrid", "1e3:1e4:geometric:8"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary = stdout_json(&o);
    let hash = summary["manifest_hash"].as_str().unwrap().to_string();
    let csv = std::fs::read_to_string(dir.path().join("moment.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("# manifest {hash}"));
    assert_eq!(lines[1], "scale,empirical_re,empirical_im,term_mask,term_value,cumulative,ratio,residual");
    assert_eq!(lines.len(), 2 + 8);
    assert!(lines[2].starts_with("1000,"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("moment.json")).unwrap()).unwrap();
    assert_eq!(json["manifest_hash"].as_str().unwrap(), hash);
    assert_eq!(json["run"]["scales"].as_array().unwrap().len(), 8);
}

#[test]
fn thread_count_does_not_change_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |t: &'static str, out: &'static str| {
        vec!["moment", "--family", "unitary", "--shift", "0.6", "--xgrid", "60,90", "--threads", t, "--out", out]
    };
    assert_eq!(code(&run(dir.path(), &args("1", "a"))), 0);
    assert_eq!(code(&run(dir.path(), &args("3", "b"))), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let ja = std::fs::read(dir.path().join("a.json")).unwrap();
    let jb = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn missing_curve_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["moment", "--family", "elliptic", "--curve", "no-such-curve.txt"]);
    assert_eq!(code(&o), 2);
    let e = stdout_json(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["exit_code"], 2);
}

#[test]
fn bad_values_and_unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.conf"), "family = symplectic\ncolour = red\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["--config", "c.conf", "predict"])), 2);
    assert_eq!(code(&run(dir.path(), &["predict", "--family", "hyperbolic"])), 2);
    assert_eq!(code(&run(dir.path(), &["predict", "--family", "symplectic", "--k", "2", "--shift", "0.6"])), 2);
}

#[test]
fn computation_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // Twisted moments need scale >= 10.
    let o = run(dir.path(), &["moment", "--family", "symplectic", "--xgrid", "5"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["error"]["kind"], "compute");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.conf"), "# prediction\nfamily = symplectic\nshift = 0.7\nscale = 1e3\n").unwrap();
    let from_file = stdout_json(&run(dir.path(), &["--config", "c.conf", "predict"]));
    let params = from_file["manifest"]["parameters"].as_array().unwrap();
    assert!(params.contains(&serde_json::json!(["shift", "0.7"])));
    let overridden = stdout_json(&run(dir.path(), &["--config", "c.conf", "predict", "--shift", "0.6"]));
    let params = overridden["manifest"]["parameters"].as_array().unwrap();
    assert!(params.contains(&serde_json::json!(["shift", "0.6"])));
    assert!(params.contains(&serde_json::json!(["scale", "1e3"])));
    assert_ne!(from_file["manifest_hash"], overridden["manifest_hash"]);
}

#[test]
fn elliptic_term_counts_by_mode() {
    let dir = tempfile::tempdir().unwrap();
    let count = |mode| {
        let o = run(dir.path(), &["predict", "--family", "elliptic", "--mode", mode, "--shift", "0.6"]);
        assert_eq!(code(&o), 0);
        stdout_json(&o)["report"]["term_count"].as_u64().unwrap()
    };
    assert_eq!(count("unmodified"), 1);
    assert_eq!(count("modified"), 2);
}

#[test]
fn verify_fe_unitary_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "fe", "--family", "unitary", "--qmax", "50"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["report"]["failures"], 0);
    assert!(r["report"]["checks"].as_u64().unwrap() > 100);
}

#[test]
fn verify_funceq_and_failure_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "funceq", "--family", "elliptic", "--cutoff", "300"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["report"]["check"]["rhs_twist"]["m"], 11);
    let o = run(dir.path(), &["verify", "funceq", "--family", "symplectic", "--cutoff", "300", "--tol", "1e-300"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["pass"], false);
}

#[test]
fn verify_residue_and_perron() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "residue", "--family", "symplectic", "--shift", "2", "--dmax", "1e4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(
        dir.path(),
        &["verify", "perron", "--family", "symplectic", "--scale", "100", "--cutoff", "400"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_appendix_writes_the_residual_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "appendix", "--curve", "11a1", "--alpha", "0.1", "--xgrid", "300,600", "--out", "app"]);
    assert!(matches!(code(&o), 0 | 1));
    let csv = std::fs::read_to_string(dir.path().join("app.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# manifest "));
    assert_eq!(lines[1], "scale,empirical,one_term,two_term,residual_one,residual_two,relative_two");
    assert_eq!(lines.len(), 4);
}

#[test]
fn cache_build_stat_purge() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let c = cache.to_str().unwrap();
    let o = run(dir.path(), &["cache", "build", "--cache-dir", c, "--curve", "11a1", "--end", "1e4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stat = || stdout_json(&run(dir.path(), &["cache", "stat", "--cache-dir", c]));
    let a = stat();
    let entries = a["report"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!((entries[0]["start"].as_u64(), entries[0]["end"].as_u64()), (Some(1), Some(10_000)));
    assert_eq!(entries[0]["valid"], true);
    assert_eq!(a, stat());

    // Moments read through the cache give the same numbers as without it.
    let args = ["moment", "--family", "elliptic", "--shift", "0.7", "--xgrid", "50", "--out"];
    let mut with = args.to_vec();
    with.extend(["w", "--cache-dir", c]);
    let mut without = args.to_vec();
    without.push("n");
    assert_eq!(code(&run(dir.path(), &with)), 0);
    assert_eq!(code(&run(dir.path(), &without)), 0);
    assert_eq!(std::fs::read(dir.path().join("w.csv")).unwrap(), std::fs::read(dir.path().join("n.csv")).unwrap());

    let o = stdout_json(&run(dir.path(), &["cache", "purge", "--cache-dir", c]));
    assert!(o["report"]["removed"].as_u64().unwrap() >= 1);
    assert!(stat()["report"]["entries"].as_array().unwrap().is_empty());
}

#[test]
fn concurrent_disjoint_builds_merge() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let c = cache.to_str().unwrap().to_string();
    let spawn = |start: &str, end: &str| {
        bin()
            .current_dir(dir.path())
            .args(["cache", "build", "--cache-dir", &c, "--start", start, "--end", end])
            .stdout(std::process::Stdio::null())
            .spawn()
            .unwrap()
    };
    let mut a = spawn("1", "3000");
    let mut b = spawn("3001", "6000");
    assert!(a.wait().unwrap().success());
    assert!(b.wait().unwrap().success());
    let stat = stdout_json(&run(dir.path(), &["cache", "stat", "--cache-dir", &c]));
    let cov = stat["report"]["coverage"].as_array().unwrap();
    assert_eq!(cov.len(), 1);
    assert_eq!(cov[0]["ranges"], serde_json::json!([[1, 6000]]));
}
