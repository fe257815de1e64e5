//! TOML run configuration. Precedence is defaults < file < flags; flags are
//! applied by the CLI on top of [`RunConfig::load`].
//!
//! ```toml
//! catalog = "catalog.jsonl"
//! labels = "labels.jsonl"
//! static_table = "attributes.jsonl"
//! k = 7
//! strategy = "veto"
//! decision_mode = "deterministic"
//! max_concurrency = 4
//!
//! [padding]
//! price_padding = 0.5
//! utility_padding = 0
//! padding_mode = "fixed"
//!
//! [attribute_mode]
//! mode = "generic"
//! top_n = 5
//!
//! [backend]
//! kind = "http"
//! endpoint = "https://example.invalid/v1/chat/completions"
//! model_name = "some-model"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::PipelineConfig;

const FILE_KEYS: [&str; 3] = ["catalog", "labels", "static_table"];
const PIPELINE_KEYS: [&str; 8] = ["k", "padding", "attribute_mode", "strategy", "decision_mode", "backend", "max_concurrency", "record_timing"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_table: Option<PathBuf>,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
}

impl RunConfig {
    /// Parses TOML text. Paths inside are resolved against `base_dir`.
    pub fn from_toml(text: &str, source: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let parse_err = |message: String| ConfigError::Parse { path: source.into(), message };
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        for key in table.keys().filter(|k| !FILE_KEYS.contains(&k.as_str()) && !PIPELINE_KEYS.contains(&k.as_str())) {
            log::warn!("{source}: ignoring unknown key `{key}`");
        }
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if let Some(base) = base_dir {
            for p in [&mut cfg.catalog, &mut cfg.labels, &mut cfg.static_table].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
        Self::from_toml(&text, &name, path.parent())
    }
}
