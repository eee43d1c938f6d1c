//! Scenario orchestration: parse, validate, run the requested reports and
//! write CSV artifacts plus a JSON manifest.

pub mod bundled;
pub mod output;
pub mod reports;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::Error;
use crate::rng::STREAM_SCHEME;

pub use bundled::{bundled, bundled_names, BundledScenario};
pub use output::{fmt_f64, ArtifactWriter, RunManifest};
pub use scenario::{ReportKind, Resolved, Scenario};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "INFODYN_OUT";
pub const DEFAULT_OUT_DIR: &str = "infodyn-out";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Numerical(_) => 4,
            RunError::Io(_) => 2,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable(_)
            | Error::Degenerate(_)
            | Error::ZeroField
            | Error::NotNormalized { .. }
            | Error::Vortex(_)
            | Error::InsufficientData(_) => RunError::Numerical(e.to_string()),
            other => RunError::Validation(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Parent directory; the run writes into `<out>/<scenario name>`.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub dir: PathBuf,
}

impl RunOutcome {
    /// 0 when every verdict passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

/// Output parent: explicit, then the environment, then `./infodyn-out`.
pub fn default_out_dir(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    }
}

/// Read a scenario from a path, or from the bundled set when no such file exists.
pub fn load(name_or_path: &str) -> Result<Scenario, RunError> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
        return Scenario::parse(&text);
    }
    match bundled(name_or_path) {
        Some(b) => Scenario::parse(b.source),
        None => Err(RunError::Parse(format!("no scenario file or bundled scenario named `{name_or_path}`"))),
    }
}

/// Dry run: resolve everything and report the effective parameters.
pub fn validate(scenario: &Scenario) -> Result<Resolved, RunError> {
    scenario.resolve()
}

/// Execute every requested report. Verdict failures are reported through the
/// manifest's exit code; parse, validation and numerical failures are errors,
/// with a manifest still written once the output directory exists.
pub fn run(mut scenario: Scenario, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let resolved = scenario.resolve()?;
    let threads = opts.threads.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
    let dir = default_out_dir(opts.out_dir.as_deref()).join(&scenario.name);
    let mut out = ArtifactWriter::new(&dir)?;
    pool.install(|| execute(&resolved, &mut out, threads))
        .map(|manifest| RunOutcome { manifest, dir: dir.clone() })
}

fn execute(res: &Resolved, out: &mut ArtifactWriter, threads: usize) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let sc = &res.scenario;
    let mut summaries = Vec::new();
    let mut failure: Option<RunError> = None;
    let mut all = Vec::new();
    {
        let mut runner = reports::Runner::new(res, out);
        for &kind in &sc.reports {
            let t0 = Instant::now();
            match runner.run(kind) {
                Ok(r) => {
                    let ok = r.verdicts.iter().all(|v| v.passed);
                    all.extend(r.verdicts.iter().map(|v| (kind.name().to_string(), v.clone())));
                    summaries.push(output::ReportSummary {
                        report: kind.name().into(),
                        status: if ok { "pass" } else { "fail" }.into(),
                        wall_time_s: t0.elapsed().as_secs_f64(),
                        verdicts: r.verdicts,
                        diagnostics: r.diagnostics,
                    });
                }
                Err(e) => {
                    summaries.push(output::ReportSummary {
                        report: kind.name().into(),
                        status: "error".into(),
                        wall_time_s: t0.elapsed().as_secs_f64(),
                        verdicts: Vec::new(),
                        diagnostics: serde_json::json!({ "error": e.to_string() }),
                    });
                    failure = Some(e);
                    break;
                }
            }
        }
    }
    // reports never reached are listed so every requested output appears once
    for &kind in sc.reports.iter().skip(summaries.len()) {
        summaries.push(output::ReportSummary {
            report: kind.name().into(),
            status: "skipped".into(),
            wall_time_s: 0.0,
            verdicts: Vec::new(),
            diagnostics: serde_json::json!({ "reason": "an earlier report aborted the run" }),
        });
    }
    out.verdicts(&all)?;
    let failed = all.iter().filter(|(_, v)| !v.passed).count();
    let (status, exit_code) = match &failure {
        Some(e) => (
            match e {
                RunError::Numerical(_) => "numerical-error",
                RunError::Parse(_) | RunError::Io(_) => "error",
                RunError::Validation(_) => "invalid",
            },
            e.exit_code(),
        ),
        None if failed > 0 => ("fail", 1),
        None => ("pass", 0),
    };
    let manifest = RunManifest {
        scenario: serde_json::to_value(sc).unwrap_or_default(),
        scenario_toml: sc.to_toml(),
        versions: output::Versions { infodyn: env!("CARGO_PKG_VERSION").into(), manifest_format: 1 },
        rng_scheme: STREAM_SCHEME.into(),
        threads,
        status: status.into(),
        exit_code,
        passed: all.len() - failed,
        failed,
        wall_time_s: start.elapsed().as_secs_f64(),
        reports: summaries,
        artifacts: out.entries.clone(),
        error: failure.as_ref().map(|e| e.to_string()),
    };
    manifest.write(out.dir())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
