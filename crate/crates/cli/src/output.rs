//! Artifact files: JSON envelopes with an isolated metadata block, and CSV
//! tables headed by a config comment line.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::commands::{Artifact, Payload};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// The only part of an artifact that differs between identical runs.
#[derive(Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    generated_unix_seconds: u64,
}

#[derive(Serialize)]
struct Envelope<'a> {
    metadata: Metadata,
    config: &'a ExperimentConfig,
    result: &'a Value,
}

fn metadata() -> Metadata {
    Metadata {
        tool: "dblrot",
        version: env!("CARGO_PKG_VERSION"),
        generated_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

/// File contents for one artifact.
pub fn render(cfg: &ExperimentConfig, artifact: &Artifact) -> String {
    match &artifact.payload {
        Payload::Json(result) => {
            let env = Envelope {
                metadata: metadata(),
                config: cfg,
                result,
            };
            let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
            s.push('\n');
            s
        }
        Payload::Csv(body) => {
            let c = serde_json::to_string(cfg).expect("config serializes");
            format!("# config: {c}\n{body}")
        }
    }
}

/// Write artifacts under `<out>/<experiment>/`, returning the paths.
pub fn write_all(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> CliResult<Vec<PathBuf>> {
    let dir = cfg.experiment_dir();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(a.file_name());
            std::fs::write(&path, render(cfg, a)).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

/// An artifact's contents with the metadata block removed, for comparing
/// runs.
pub fn data_payload(path: &Path) -> std::io::Result<String> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: Value = serde_json::from_str(&text).map_err(std::io::Error::other)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        Ok(serde_json::to_string(&v).expect("parsed JSON serializes"))
    } else {
        Ok(text)
    }
}
