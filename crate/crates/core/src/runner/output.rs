//! CSV artifacts and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::runner::RunError;
use crate::stats::Verdict;

#[derive(Clone, Debug, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub report: String,
    pub description: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

/// Writes CSV files into one directory and keeps the index.
pub struct ArtifactWriter {
    dir: PathBuf,
    pub entries: Vec<ArtifactEntry>,
}

/// Shortest round-trip decimal form; identical bits give identical text.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<R>(&mut self, file: &str, report: &str, description: &str, columns: &[&str], rows: R) -> Result<(), RunError>
    where
        R: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.dir.join(file);
        let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(columns).map_err(io)?;
        let mut count = 0;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            w.write_record(row.iter().map(|x| fmt_f64(*x))).map_err(io)?;
            count += 1;
        }
        w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.entries.push(ArtifactEntry {
            file: file.to_string(),
            report: report.to_string(),
            description: description.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: count,
        });
        Ok(())
    }

    /// Verdict table, one row per verdict.
    pub fn verdicts(&mut self, verdicts: &[(String, Verdict)]) -> Result<(), RunError> {
        let file = "verdicts.csv";
        let path = self.dir.join(file);
        let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        let columns = ["report", "name", "value", "reference", "tolerance", "z_score", "passed"];
        w.write_record(columns).map_err(io)?;
        for (report, v) in verdicts {
            w.write_record([
                report.clone(),
                v.name.clone(),
                fmt_f64(v.value),
                fmt_f64(v.reference),
                fmt_f64(v.tolerance),
                v.z_score.map(fmt_f64).unwrap_or_default(),
                v.passed.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        self.entries.push(ArtifactEntry {
            file: file.into(),
            report: "all".into(),
            description: "verdict table".into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: verdicts.len(),
        });
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportSummary {
    pub report: String,
    pub status: String,
    pub wall_time_s: f64,
    pub verdicts: Vec<Verdict>,
    pub diagnostics: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub infodyn: String,
    pub manifest_format: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub scenario: serde_json::Value,
    pub scenario_toml: String,
    pub versions: Versions,
    pub rng_scheme: String,
    pub threads: usize,
    pub status: String,
    pub exit_code: i32,
    pub passed: usize,
    pub failed: usize,
    pub wall_time_s: f64,
    pub reports: Vec<ReportSummary>,
    pub artifacts: Vec<ArtifactEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String, RunError> {
        serde_json::to_string_pretty(self).map_err(|e| RunError::Io(e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, RunError> {
        let path = dir.join("manifest.json");
        let text = self.to_json()?;
        std::fs::write(&path, text + "\n").map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.reports.iter().flat_map(|r| r.verdicts.iter())
    }
}
