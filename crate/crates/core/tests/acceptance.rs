//! Acceptance run: one line per criterion, each backed by bundled scenarios.
//! Set `INFODYN_ACCEPTANCE_KEEP=1` to keep the output directories.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use infodyn::runner::{self, ReportKind, RunOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn run_one(name: &str, reports: Option<&[ReportKind]>, out: &Path) -> (bool, String) {
    let mut sc = match runner::load(name) {
        Ok(sc) => sc,
        Err(e) => return (false, format!("{name}: {e}")),
    };
    if let Some(r) = reports {
        sc.reports = r.to_vec();
    }
    match runner::run(sc, &RunOptions { out_dir: Some(out.to_path_buf()), seed: None, threads: None }) {
        Ok(o) => {
            let failed: Vec<String> = o.manifest.verdicts().filter(|v| !v.passed).map(|v| v.name.clone()).collect();
            if failed.is_empty() {
                (true, format!("{name}: {} verdicts pass", o.manifest.passed))
            } else {
                (false, format!("{name}: failed {}", failed.join(", ")))
            }
        }
        Err(e) => (false, format!("{name}: {e}")),
    }
}

/// Runs the scenarios in order and checks the total wall time against `limit`.
fn scenarios(runs: &[(&str, Option<&[ReportKind]>)], limit: Duration, out: &Path) -> Outcome {
    let start = Instant::now();
    let mut passed = true;
    let mut notes = Vec::new();
    for (name, reports) in runs {
        let (ok, note) = run_one(name, *reports, out);
        passed &= ok;
        notes.push(note);
    }
    let took = start.elapsed();
    if took > limit {
        passed = false;
        notes.push(format!("took {:.1} s, limit {:.0} s", took.as_secs_f64(), limit.as_secs_f64()));
    } else {
        notes.push(format!("{:.1} s of {:.0} s", took.as_secs_f64(), limit.as_secs_f64()));
    }
    Outcome { passed, detail: notes.join("; ") }
}

fn numeric_outputs(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path)?);
        }
    }
    Ok(out)
}

fn rerun_identical(names: &[&str], out: &Path) -> Outcome {
    let mut notes = Vec::new();
    let mut passed = true;
    for name in names {
        let a = out.join("first");
        let b = out.join("second");
        for (dir, threads) in [(&a, 1), (&b, 2)] {
            let sc = runner::load(name).expect("bundled");
            let opts = RunOptions { out_dir: Some(dir.clone()), seed: Some(20240607), threads: Some(threads) };
            if let Err(e) = runner::run(sc, &opts) {
                return Outcome { passed: false, detail: format!("{name}: {e}") };
            }
        }
        match (numeric_outputs(&a.join(name)), numeric_outputs(&b.join(name))) {
            (Ok(x), Ok(y)) => {
                let same = !x.is_empty() && x == y;
                passed &= same;
                notes.push(format!("{name}: {} CSV files {}", x.len(), if same { "byte-identical" } else { "differ" }));
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    Outcome { passed, detail: notes.join("; ") }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path().to_path_buf();
    let out = root.as_path();
    let secs = Duration::from_secs;
    use ReportKind::*;
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("deviation law", Box::new(move || scenarios(&[("deviation-law", None)], secs(5), out))),
        ("born-rule equivariance", Box::new(move || scenarios(&[("sho-born-rule", None)], secs(120), out))),
        ("fluctuation scaling", Box::new(move || scenarios(&[("fluctuation-scaling", None)], secs(120), out))),
        ("classical limit", Box::new(move || scenarios(&[("classical-limit", None)], secs(120), out))),
        ("information balance", Box::new(move || scenarios(&[("information-balance", None)], secs(60), out))),
        (
            "uncertainty relation",
            Box::new(move || {
                scenarios(
                    &[
                        ("sho-ground-uncertainty", Some(&[Uncertainty])),
                        ("free-gaussian-uncertainty", Some(&[Uncertainty])),
                        ("box-uncertainty", None),
                        ("box-excited-uncertainty", None),
                    ],
                    secs(60),
                    out,
                )
            }),
        ),
        (
            "operator averages",
            Box::new(move || {
                scenarios(
                    &[
                        ("sho-ground-uncertainty", Some(&[OperatorAverages])),
                        ("coherent-operator-averages", None),
                        ("plane-wave-operator-averages", None),
                    ],
                    secs(60),
                    out,
                )
            }),
        ),
        ("locality", Box::new(move || scenarios(&[("product-locality", None)], secs(300), out))),
        (
            "solver cross-validation",
            Box::new(move || {
                scenarios(
                    &[("solver-cross-validation", None), ("free-gaussian-uncertainty", Some(&[SolverCrossValidation]))],
                    secs(120),
                    out,
                )
            }),
        ),
        (
            "determinism",
            Box::new(move || {
                let inner = scenarios(&[("determinism", None)], secs(120), out);
                let rerun = rerun_identical(&["determinism", "deviation-law"], &out.join("rerun"));
                Outcome { passed: inner.passed && rerun.passed, detail: format!("{}; {}", inner.detail, rerun.detail) }
            }),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += !o.passed as usize;
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    drop(criteria);
    if std::env::var_os("INFODYN_ACCEPTANCE_KEEP").is_some() {
        println!("outputs kept in {}", tmp.keep().display());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
