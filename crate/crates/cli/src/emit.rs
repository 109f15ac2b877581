//! Writing a result bundle: CSV tables, pretty JSON reports, run metadata, then the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::run::Bundle;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const METADATA: &str = "metadata.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub kind: String,
    pub passed: bool,
    pub files: Vec<ManifestEntry>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None if x.is_nan() => "NaN".into(),
        None if x > 0.0 => "inf".into(),
        None => "-inf".into(),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of the config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

struct Writer {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Writer {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if bytes.is_empty() {
            return Err(CliError::Output(format!("refusing to write empty file {name}")));
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.files.push(ManifestEntry { path: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[String], rows: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_num(x))).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// Writes `bundle` under `dir` and returns the manifest, which is written last.
pub fn emit(bundle: &Bundle, cfg: &ExperimentConfig, dir: &Path, wall_time: f64) -> Result<Manifest, CliError> {
    if let Some(t) = bundle.tables.iter().find(|t| t.rows.is_empty()) {
        return Err(CliError::Output(format!("table {} has no rows", t.name)));
    }
    if let Some(t) = bundle.tables.iter().find(|t| t.rows.iter().any(|r| r.len() != t.header.len())) {
        return Err(CliError::Output(format!("table {} has rows that do not match its header", t.name)));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut w = Writer { dir: dir.to_path_buf(), files: Vec::new() };
    for t in &bundle.tables {
        w.write(&format!("{}.csv", t.name), &csv_bytes(&t.header, &t.rows)?)?;
    }
    for (name, report) in &bundle.reports {
        w.write(&format!("{name}.json"), &pretty(report))?;
    }
    let version = env!("CARGO_PKG_VERSION").to_string();
    let meta = json!({
        "version": version,
        "kind": bundle.kind.name(),
        "config_hash": config_hash(cfg),
        "wall_time_seconds": wall_time,
        "passed": bundle.passed(),
        "checks": bundle.checks,
        "config": cfg,
    });
    w.write(METADATA, &pretty(&meta))?;
    let manifest = Manifest { version, kind: bundle.kind.name().to_string(), passed: bundle.passed(), files: w.files.clone() };
    let bytes = pretty(&serde_json::to_value(&manifest).expect("manifest serializes"));
    let path = dir.join(MANIFEST);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(manifest)
}
