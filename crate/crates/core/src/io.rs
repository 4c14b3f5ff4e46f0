//! Manifest JSON and trace text formats.
//!
//! A trace file holds one throughput value in Mbps per line, one line per
//! 1-second slot. Blank lines and lines starting with `#` are ignored.
//! Throughput converts to bytes per slot at 125000 bytes per Mbit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, VideoManifest, BYTES_PER_MBIT};
use crate::simulator::Trace;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub name: String,
    pub nominal_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSpec {
    pub sizes_bytes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub chunk_duration_s: u64,
    pub startup_delay_s: u64,
    pub levels: Vec<LevelSpec>,
    pub chunks: Vec<ChunkSpec>,
}

impl ManifestFile {
    pub fn from_manifest(manifest: &VideoManifest) -> Self {
        let rates = manifest
            .nominal_mbps()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| manifest.level_rates().iter().map(|r| r / BYTES_PER_MBIT).collect());
        Self {
            chunk_duration_s: manifest.chunk_duration_s(),
            startup_delay_s: manifest.startup_delay_s(),
            levels: rates
                .into_iter()
                .enumerate()
                .map(|(n, nominal_mbps)| LevelSpec {
                    name: format!("level{n}"),
                    nominal_mbps,
                })
                .collect(),
            chunks: (0..manifest.num_chunks())
                .map(|c| ChunkSpec {
                    sizes_bytes: manifest.chunk_sizes(c).to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_manifest(self) -> Result<VideoManifest, IoError> {
        if self.levels.is_empty() {
            return Err(IoError::Manifest("at least one level is required".into()));
        }
        if let Some((i, c)) = self
            .chunks
            .iter()
            .enumerate()
            .find(|(_, c)| c.sizes_bytes.len() != self.levels.len())
        {
            return Err(IoError::Manifest(format!(
                "chunk {i} lists {} sizes but there are {} levels",
                c.sizes_bytes.len(),
                self.levels.len()
            )));
        }
        let rates = self.levels.iter().map(|l| l.nominal_mbps).collect();
        let sizes = self.chunks.into_iter().map(|c| c.sizes_bytes).collect();
        Ok(VideoManifest::new(self.chunk_duration_s, self.startup_delay_s, sizes)?.with_nominal_mbps(rates)?)
    }
}

pub fn parse_manifest(text: &str) -> Result<VideoManifest, IoError> {
    serde_json::from_str::<ManifestFile>(text)?.into_manifest()
}

pub fn manifest_to_json(manifest: &VideoManifest) -> String {
    serde_json::to_string_pretty(&ManifestFile::from_manifest(manifest)).expect("manifest serializes") + "\n"
}

/// Parses trace text into Mbps samples.
pub fn parse_trace(text: &str) -> Result<Vec<f64>, IoError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| IoError::Trace {
            line: idx + 1,
            message: format!("{line:?} is not a number"),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(IoError::Trace {
                line: idx + 1,
                message: format!("throughput must be a non-negative finite number, got {line}"),
            });
        }
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(IoError::Trace {
            line: 0,
            message: "trace has no samples".into(),
        });
    }
    Ok(samples)
}

pub fn format_trace(mbps: &[f64]) -> String {
    mbps.iter().map(|v| format!("{v:?}\n")).collect()
}

pub fn mbps_to_bytes(mbps: &[f64]) -> Vec<f64> {
    mbps.iter().map(|v| v * BYTES_PER_MBIT).collect()
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<VideoManifest, IoError> {
    parse_manifest(&read(path)?)
}

/// Reads a trace file, named after its file stem, in bytes per slot.
pub fn read_trace(path: &Path) -> Result<Trace, IoError> {
    let mbps = parse_trace(&read(path)?)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Trace::new(name, mbps_to_bytes(&mbps)))
}
