//! Command-line front end: moments, predictions, verification reports and
//! the coefficient cache.

mod commands;
mod config;
mod error;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "qmoments", version, about = "Shifted moments of L-function families and their recipe predictions")]
struct Cli {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    keys: Keys,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical moments over a scale grid against the prediction (JSON + CSV).
    Moment,
    /// Prediction terms at one scale.
    Predict,
    /// Verification reports; exit status 1 when the check fails.
    Verify { which: Check },
    /// Coefficient cache maintenance.
    Cache { action: CacheAction },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Fe,
    Residue,
    Funceq,
    Perron,
    Appendix,
}

#[derive(Clone, Copy, ValueEnum)]
enum CacheAction {
    Build,
    Stat,
    Purge,
}

/// One flag per configuration key.
#[derive(Args, Default)]
struct Keys {
    /// unitary, symplectic, orthogonal or elliptic
    #[arg(long, global = true)]
    family: Option<String>,
    /// Number of shifts (checked against --shift)
    #[arg(long, global = true)]
    k: Option<String>,
    /// Shifts, repeated or comma separated; complex as 0.5+0.3i
    #[arg(long, global = true)]
    shift: Vec<String>,
    /// Unitary z-shifts (default: the s-shifts)
    #[arg(long, global = true)]
    zshift: Vec<String>,
    #[arg(long = "M", alias = "m", global = true)]
    m: Option<String>,
    #[arg(long = "N", alias = "n", global = true)]
    n: Option<String>,
    /// lo:hi:geometric:n, lo:hi:linear:n or a comma list
    #[arg(long, global = true)]
    xgrid: Option<String>,
    #[arg(long, global = true)]
    scale: Option<String>,
    /// modified or unmodified
    #[arg(long, global = true)]
    mode: Option<String>,
    /// 11a1 or a curve file
    #[arg(long, global = true)]
    curve: Option<String>,
    /// delta or a form file
    #[arg(long, global = true)]
    form: Option<String>,
    /// Test function, e.g. bump:1:2
    #[arg(long, global = true)]
    g: Option<String>,
    #[arg(long, global = true)]
    prime_limit: Option<String>,
    #[arg(long, global = true)]
    weight_eps: Option<String>,
    #[arg(long, global = true)]
    length_factor: Option<String>,
    #[arg(long, global = true)]
    split: Option<String>,
    #[arg(long, global = true)]
    cache_dir: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Output path prefix; `.json` and `.csv` are appended
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    qmax: Option<String>,
    #[arg(long, global = true)]
    dmax: Option<String>,
    #[arg(long, global = true)]
    cutoff: Option<String>,
    #[arg(long, global = true)]
    w: Option<String>,
    /// Subset J as a bit mask
    #[arg(long, global = true)]
    j: Option<String>,
    /// Subset H as a bit mask
    #[arg(long, global = true)]
    h: Option<String>,
    #[arg(long, global = true)]
    c: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    step: Option<String>,
    #[arg(long, global = true)]
    t_max: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    #[arg(long, global = true)]
    start: Option<String>,
    #[arg(long, global = true)]
    end: Option<String>,
}

impl Keys {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        let list = |v: &Vec<String>| (!v.is_empty()).then(|| v.join(","));
        vec![
            ("family", self.family.clone()),
            ("k", self.k.clone()),
            ("shift", list(&self.shift)),
            ("zshift", list(&self.zshift)),
            ("M", self.m.clone()),
            ("N", self.n.clone()),
            ("xgrid", self.xgrid.clone()),
            ("scale", self.scale.clone()),
            ("mode", self.mode.clone()),
            ("curve", self.curve.clone()),
            ("form", self.form.clone()),
            ("g", self.g.clone()),
            ("prime_limit", self.prime_limit.clone()),
            ("weight_eps", self.weight_eps.clone()),
            ("length_factor", self.length_factor.clone()),
            ("split", self.split.clone()),
            ("cache_dir", self.cache_dir.clone()),
            ("threads", self.threads.clone()),
            ("out", self.out.clone()),
            ("qmax", self.qmax.clone()),
            ("dmax", self.dmax.clone()),
            ("cutoff", self.cutoff.clone()),
            ("w", self.w.clone()),
            ("j", self.j.clone()),
            ("h", self.h.clone()),
            ("c", self.c.clone()),
            ("alpha", self.alpha.clone()),
            ("step", self.step.clone()),
            ("t_max", self.t_max.clone()),
            ("tol", self.tol.clone()),
            ("start", self.start.clone()),
            ("end", self.end.clone()),
        ]
    }
}

fn write(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::from)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut values: BTreeMap<String, String> = match &cli.config {
        Some(p) => config::read_file(p)?,
        None => BTreeMap::new(),
    };
    for (k, v) in cli.keys.pairs() {
        debug_assert!(config::KEYS.contains(&k));
        if let Some(v) = v {
            values.insert(k.to_string(), v);
        }
    }
    let cfg = RunConfig::new(values);
    if let Some(n) = cfg.threads()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = match cli.command {
        Command::Moment => commands::moment(&cfg)?,
        Command::Predict => commands::predict(&cfg)?,
        Command::Verify { which } => match which {
            Check::Fe => commands::verify_fe(&cfg)?,
            Check::Residue => commands::verify_residue(&cfg)?,
            Check::Funceq => commands::verify_funceq(&cfg)?,
            Check::Perron => commands::verify_perron(&cfg)?,
            Check::Appendix => commands::verify_appendix(&cfg)?,
        },
        Command::Cache { action } => match action {
            CacheAction::Build => commands::cache_build(&cfg)?,
            CacheAction::Stat => commands::cache_stat(&cfg)?,
            CacheAction::Purge => commands::cache_purge(&cfg)?,
        },
    };
    let json = serde_json::to_string_pretty(&out.json).expect("report serializes");
    // Moment runs always write files; other commands only with --out.
    let prefix = cfg.out().or_else(|| matches!(cli.command, Command::Moment).then(|| "moment".to_string()));
    match prefix {
        Some(prefix) => {
            let mut files = vec![format!("{prefix}.json")];
            write(&files[0], &json)?;
            if let Some(csv) = &out.csv {
                files.push(format!("{prefix}.csv"));
                write(&files[1], csv)?;
            }
            let mut summary = serde_json::json!({ "manifest_hash": out.json["manifest_hash"], "files": files });
            if let Some(p) = out.pass {
                summary["pass"] = p.into();
            }
            println!("{summary}");
        }
        None => println!("{json}"),
    }
    Ok(match out.pass {
        Some(false) => 1,
        _ => 0,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
