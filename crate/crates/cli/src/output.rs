// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Artifact writing: CSV files in the output directory plus a JSON manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bosonic_qec::Result;
use serde::Serialize;

pub const REVISION: &str = env!("BQEC_REVISION");

/// Files and warnings produced by one command.
#[derive(Debug, Default)]
pub struct Artifacts {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), ..Default::default() })
    }

    /// Create `name` in the output directory and fill it with `body`.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// Write `<command>.manifest.json` describing this run.
    pub fn finish(&mut self, command: &str, arguments: &[String], config_hash: &str, seed: u64) -> Result<PathBuf> {
        let manifest = Manifest {
            command,
            arguments,
            config_sha256: config_hash,
            master_seed: seed,
            revision: REVISION,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            outputs: self.files.iter().map(|p| file_name(p)).collect(),
            warnings: &self.warnings,
        };
        let path = self.dir.join(format!("{command}.manifest.json"));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    arguments: &'a [String],
    config_sha256: &'a str,
    master_seed: u64,
    revision: &'a str,
    timestamp_unix: u64,
    outputs: Vec<String>,
    warnings: &'a [String],
}

/// A float with 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}
