//! Per-stage manifests: what ran, with which settings, on which files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the pipeline directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn entry(root: &Path, rel: &Path) -> Result<FileEntry> {
    let path = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/");
    Ok(FileEntry {
        path,
        sha256: sha256_file(&root.join(rel))?,
    })
}

/// Manifest file name for a stage.
pub fn manifest_name(command: &str) -> String {
    format!("manifest-{command}.json")
}

/// Builds and writes `manifest-<command>.json` under `root`. Paths are
/// relative to `root`; there are no timestamps, so identical runs produce
/// identical manifests.
pub fn write_manifest<C: Serialize>(
    root: &Path,
    command: &str,
    seed: u64,
    config: &C,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<RunManifest> {
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: serde_json::to_value(config).map_err(CliError::other)?,
        inputs: inputs.iter().map(|p| entry(root, p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| entry(root, p)).collect::<Result<_>>()?,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::other)?;
    text.push('\n');
    let path = root.join(manifest_name(command));
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path, command: &str) -> Result<RunManifest> {
    let path = root.join(manifest_name(command));
    let text = fs::read_to_string(&path).map_err(|_| CliError::Missing(path.clone()))?;
    serde_json::from_str(&text).map_err(CliError::other)
}
