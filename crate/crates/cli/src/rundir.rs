//! Run directories: field CSVs, `manifest.json`, `report.json`, and a
//! `FAILED` marker when a solver stops early.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stefan_core::report::{FileEntry, Provenance};
use stefan_core::{Grid, RunReport, TemperatureField};

use crate::config::{hex, ExperimentConfig};
use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA: &str = "stefan-run-manifest/1";
pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";
pub const FAILED: &str = "FAILED";

/// Snapshot files of one field, in time order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSeries {
    pub grid: String,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    /// `complete` or `failed`.
    pub status: String,
    /// Geometry of each field grid; CSV headers omit the origin.
    #[serde(default)]
    pub grids: BTreeMap<String, Grid>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            command: config.mode.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config_sha256: config.sha256(),
            config: ExperimentConfig { out: None, ..config.clone() },
            status: "complete".to_string(),
            grids: BTreeMap::new(),
            fields: BTreeMap::new(),
            dt: None,
            stability_limit: None,
            steps: None,
        }
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self, name: &str) -> CliResult<&Grid> {
        self.grids.get(name).ok_or_else(|| CliError::Usage(format!("manifest has no grid {name:?}")))
    }
}

/// Where a command writes: a run directory, only a report file, or the
/// report on standard output.
pub enum Sink {
    Dir(RunDir),
    Report(PathBuf),
    Stdout,
    /// Nothing is written.
    Discard,
}

impl Sink {
    /// A path ending in `.json` selects a report-only run; no path prints
    /// the report.
    pub fn open(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Sink::Stdout) };
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Ok(Sink::Report(path.to_path_buf()))
        } else {
            Ok(Sink::Dir(RunDir::create(path)?))
        }
    }

    pub fn dir(&mut self) -> Option<&mut RunDir> {
        match self {
            Sink::Dir(d) => Some(d),
            Sink::Report(_) | Sink::Stdout | Sink::Discard => None,
        }
    }

    /// Writes the manifest (directories only), the failure marker if the
    /// report carries one, then the report with the file inventory.
    pub fn finish(self, manifest: Option<Manifest>, report: &mut RunReport, config: &ExperimentConfig) -> CliResult<()> {
        report.provenance = Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config.sha256(),
            seed: Some(config.seed),
        };
        match self {
            Sink::Report(path) => {
                fs::write(&path, report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
            }
            Sink::Discard => Ok(()),
            Sink::Stdout => {
                use std::io::Write;
                std::io::stdout().write_all(report.to_json().as_bytes())?;
                Ok(())
            }
            Sink::Dir(mut dir) => {
                if let Some(mut m) = manifest {
                    if report.failure.is_some() {
                        m.status = "failed".to_string();
                    }
                    let text = serde_json::to_string_pretty(&m).expect("manifest serialises") + "\n";
                    dir.write(MANIFEST, text.as_bytes())?;
                }
                if let Some(msg) = &report.failure {
                    dir.write(FAILED, format!("{msg}\n").as_bytes())?;
                }
                report.files = dir.inventory()?;
                dir.write_unlisted(REPORT, report.to_json().as_bytes())
            }
        }
    }
}

pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// Creates the directory, clearing the outputs of an earlier run there.
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        if let Ok(old) = Manifest::read(root) {
            for series in old.fields.values() {
                for f in &series.files {
                    let _ = fs::remove_file(root.join(f));
                }
            }
        }
        for stale in [FAILED, REPORT, MANIFEST] {
            let _ = fs::remove_file(root.join(stale));
        }
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        self.write_unlisted(rel, bytes)?;
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(())
    }

    fn write_unlisted(&self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Lists a file some other writer already placed under the root.
    pub fn record(&mut self, rel: &str) {
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
    }

    pub fn write_field(&mut self, rel: &str, field: &TemperatureField) -> CliResult<()> {
        let mut buf = Vec::new();
        field.write_csv(&mut buf).map_err(CliError::compute)?;
        self.write(rel, &buf)
    }

    /// Writes snapshot CSVs `<prefix>_<k>.csv` and records them in the manifest.
    pub fn write_series(
        &mut self,
        manifest: &mut Manifest,
        name: &str,
        grid: &Grid,
        snapshots: &[TemperatureField],
    ) -> CliResult<()> {
        manifest.grids.insert(name.to_string(), grid.clone());
        let mut series = FieldSeries { grid: name.to_string(), times: Vec::new(), files: Vec::new() };
        for (k, s) in snapshots.iter().enumerate() {
            let rel = format!("{name}_{k:04}.csv");
            self.write_field(&rel, s)?;
            series.times.push(s.time());
            series.files.push(rel);
        }
        manifest.fields.insert(name.to_string(), series);
        Ok(())
    }

    fn inventory(&self) -> CliResult<Vec<FileEntry>> {
        let mut out: Vec<FileEntry> = self
            .files
            .iter()
            .map(|rel| {
                let bytes = fs::read(self.root.join(rel))?;
                Ok(FileEntry { path: rel.clone(), bytes: bytes.len() as u64, sha256: hex(&Sha256::digest(&bytes)) })
            })
            .collect::<CliResult<_>>()?;
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }
}

/// Loads every snapshot of a recorded field series.
pub fn read_series(dir: &Path, manifest: &Manifest, name: &str) -> CliResult<Vec<TemperatureField>> {
    let series = manifest.fields.get(name).ok_or_else(|| CliError::Usage(format!("run has no field {name:?}")))?;
    let origin: Option<Vec<f64>> = manifest.grids.get(&series.grid).map(|g| g.axes().iter().map(|a| a.origin).collect());
    series
        .files
        .iter()
        .map(|rel| {
            let path = dir.join(rel);
            let file = fs::File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            TemperatureField::read_csv(std::io::BufReader::new(file), origin.as_deref())
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        })
        .collect()
}
