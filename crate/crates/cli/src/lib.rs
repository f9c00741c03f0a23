//! Config parsing, experiment dispatch and result files for the `fpplab` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fpplab_core::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentReport, Extras};
use fpplab_core::theory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of the JSON config layout.
pub const CONFIG_SCHEMA: u32 = 1;

/// Output directory when neither `--out` nor `FPPLAB_OUT` is given.
pub const DEFAULT_OUT: &str = "fpplab-out";

/// Seed used when a config names none.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fpplab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// On-disk config. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: Option<u32>,
    pub kind: Option<String>,
    pub n: Option<usize>,
    #[serde(alias = "lambda_n")]
    pub lambda: Option<f64>,
    pub reps: Option<usize>,
    #[serde(alias = "seed")]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub extras: Extras,
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
}

/// Parses config text. `kind` is the subcommand's experiment; a config naming a
/// different kind is rejected.
pub fn parse_config_str(text: &str, kind: Option<ExperimentKind>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    resolve(file, kind, overrides)
}

/// Reads and parses a config file.
pub fn parse_config_file(path: &Path, kind: Option<ExperimentKind>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_str(&text, kind, overrides)
}

/// Builds a config from flags alone.
pub fn config_from_flags(kind: ExperimentKind, overrides: &Overrides) -> Result<ExperimentConfig> {
    let file = ConfigFile {
        schema: Some(CONFIG_SCHEMA),
        kind: Some(kind.name().to_string()),
        ..ConfigFile::default()
    };
    resolve(file, Some(kind), overrides)
}

fn resolve(file: ConfigFile, kind: Option<ExperimentKind>, o: &Overrides) -> Result<ExperimentConfig> {
    let schema = file.schema.ok_or(CliError::MissingKey("schema"))?;
    if schema != CONFIG_SCHEMA {
        return Err(CliError::Config(format!(
            "unsupported schema {schema}, expected {CONFIG_SCHEMA}"
        )));
    }
    let named = match &file.kind {
        Some(name) => Some(
            ExperimentKind::from_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown experiment kind `{name}`")))?,
        ),
        None => None,
    };
    let kind = match (named, kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Config(format!(
                "config is for `{}` but the command runs `{}`",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::MissingKey("kind")),
    };
    let lambda = o.lambda.or(file.lambda).ok_or(CliError::MissingKey("lambda"))?;
    let n = match o.n.or(file.n) {
        Some(n) => n,
        None if kind.uses_graphs() => return Err(CliError::MissingKey("n")),
        None => 0,
    };
    let config = ExperimentConfig {
        kind,
        n,
        lambda,
        reps: o.reps.or(file.reps).unwrap_or(kind.default_reps()),
        master_seed: o.seed.or(file.master_seed).unwrap_or(DEFAULT_SEED),
        extras: file.extras,
    };
    config.validate()?;
    Ok(config)
}

/// The config in the on-disk layout, with every default made explicit.
pub fn canonical_config_json(config: &ExperimentConfig) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        schema: u32,
        kind: &'static str,
        n: usize,
        lambda: f64,
        reps: usize,
        master_seed: u64,
        extras: &'a Extras,
    }
    let c = Canonical {
        schema: CONFIG_SCHEMA,
        kind: config.kind.name(),
        n: config.n,
        lambda: config.lambda,
        reps: config.reps,
        master_seed: config.master_seed,
        extras: &config.extras,
    };
    let mut s = serde_json::to_string_pretty(&c).expect("config serialises");
    s.push('\n');
    s
}

/// `--out`, else `FPPLAB_OUT`, else [`DEFAULT_OUT`].
pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("FPPLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

/// What is needed to reproduce a run's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: &'static str,
    pub master_seed: u64,
    pub config_path: Option<String>,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub output_dir: String,
    pub threads: Option<usize>,
    pub files: Vec<FileEntry>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub passed: bool,
}

pub struct RunOutcome {
    pub report: ExperimentReport,
    pub files: Vec<PathBuf>,
    pub manifest: RunManifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the experiment and writes `<kind>_report.json`, `<kind>_raw.csv`,
/// `<kind>_plot.csv` and `<kind>_manifest.json` into `out`.
pub fn run_to_dir(
    config: &ExperimentConfig,
    out: &Path,
    config_path: Option<&Path>,
    threads: Option<usize>,
) -> Result<RunOutcome> {
    let started = unix_now();
    let report = with_threads(threads, || experiments::run(config))??;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let stem = config.kind.name();
    let outputs = [
        (format!("{stem}_report.json"), report.to_json()),
        (format!("{stem}_raw.csv"), report.raw_csv()),
        (format!("{stem}_plot.csv"), report.plot_csv()),
    ];
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (name, body) in &outputs {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        entries.push(FileEntry {
            name: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
        });
        files.push(path);
    }
    let canonical = canonical_config_json(config);
    let manifest = RunManifest {
        tool: "fpplab",
        version: env!("CARGO_PKG_VERSION"),
        kind: stem,
        master_seed: config.master_seed,
        config_path: config_path.map(|p| p.display().to_string()),
        config_sha256: sha256_hex(canonical.as_bytes()),
        config: serde_json::from_str(&canonical).expect("canonical config parses"),
        output_dir: out.display().to_string(),
        threads,
        files: entries,
        started_unix: started,
        finished_unix: unix_now(),
        passed: report.passed(),
    };
    let path = out.join(format!("{stem}_manifest.json"));
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    body.push('\n');
    std::fs::write(&path, body).map_err(io_err(&path))?;
    files.push(path);
    Ok(RunOutcome {
        report,
        files,
        manifest,
    })
}

/// Short human-readable summary of a report's checks.
pub fn check_summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let rel = match c.relation {
            experiments::Relation::AtMost => "<=",
            experiments::Relation::AtLeast => ">=",
            experiments::Relation::Above => ">",
        };
        let _ = writeln!(
            s,
            "{:<5} {} = {:.6} ({rel} {:.6})",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    for note in &report.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

/// Names and values of the printed limit constants, in display order.
pub fn theory_rows(lambda: f64) -> Result<Vec<(&'static str, f64)>> {
    let c = theory::constants(lambda)?;
    Ok(vec![
        ("beta", c.beta),
        ("gamma", c.gamma),
        ("p_lambda", c.p_lambda),
        ("mu_lambda", c.mu_lambda),
        ("theta_star", c.theta_star),
        ("c_lambda", c.c_lambda),
        ("d_lambda", c.d_lambda),
    ])
}

/// The `theory` subcommand's output.
pub fn theory_output(lambda: f64, json: bool) -> Result<String> {
    let rows = theory_rows(lambda)?;
    if json {
        let map: serde_json::Map<String, serde_json::Value> = rows
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
            .collect();
        let mut s = serde_json::to_string_pretty(&map).expect("constants serialise");
        s.push('\n');
        return Ok(s);
    }
    let mut s = format!("lambda      {lambda:.12}\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<11} {v:.12}");
    }
    Ok(s)
}
