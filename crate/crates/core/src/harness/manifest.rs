use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{WalkError, WalkResult};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiments::ENGINE_VERSION;
use crate::harness::table::ResultTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub experiment: String,
    pub rows: usize,
    pub sha256: String,
    pub config_hash: String,
    pub wall_time_seconds: f64,
}

/// JSON sidecar describing every table written by one invocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub command: String,
    pub files: Vec<ManifestEntry>,
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            engine_version: ENGINE_VERSION.into(),
            command: command.into(),
            ..Self::default()
        }
    }

    /// Writes `table` as CSV to `path` and records it.
    pub fn write_table(
        &mut self,
        path: &Path,
        table: &ResultTable,
        cfg: &ExperimentConfig,
    ) -> WalkResult<()> {
        let text = table.to_csv();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &text)?;
        self.files.push(ManifestEntry {
            path: path.to_path_buf(),
            experiment: table.experiment.clone(),
            rows: table.rows.len(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            config_hash: cfg.content_hash(),
            wall_time_seconds: table.wall_time,
        });
        Ok(())
    }

    /// Sidecar path for a table written to `csv`: `name.csv` → `name.manifest.json`.
    pub fn sidecar_for(csv: &Path) -> PathBuf {
        csv.with_extension("manifest.json")
    }

    pub fn to_json(&self) -> WalkResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| WalkError::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> WalkResult<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
