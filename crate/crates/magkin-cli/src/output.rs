//! CSV artifacts and the JSON manifest describing a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// One file written by an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub description: String,
    pub rows: usize,
}

/// Collects the outputs of one experiment inside its directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
    constants: BTreeMap<String, Value>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), constants: BTreeMap::new() })
    }

    /// Writes a CSV file with a one-line header and registers it.
    pub fn csv(
        &mut self,
        name: &str,
        description: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        if self.files.iter().any(|f| f.path == name) {
            return Err(CliError::Io(format!("{name}: written twice in one run")));
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(FileEntry { path: name.to_string(), description: description.to_string(), rows: rows.len() });
        Ok(())
    }

    pub fn constant(&mut self, name: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.constants.insert(name.into(), v);
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(
        self,
        experiment: &str,
        config: &ExperimentConfig,
        wall_seconds: f64,
        passed: bool,
    ) -> Result<PathBuf, CliError> {
        let manifest = serde_json::json!({
            "experiment": experiment,
            "passed": passed,
            "versions": {
                "magkin-cli": env!("CARGO_PKG_VERSION"),
            },
            "wall_time_seconds": wall_seconds,
            "workers": rayon::current_num_threads(),
            "config": config,
            "constants": self.constants,
            "files": self.files,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

/// Shortest round-trip representation, so reruns produce identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
