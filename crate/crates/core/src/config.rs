//! Optional TOML configuration file for the CLI.
//!
//! Every field is optional; precedence is command-line flag, then config
//! file, then the compiled default from [`crate::defaults`]. The
//! [`resolve`] helper applies that order one value at a time, so each
//! subcommand states explicitly which knobs it honors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// `[inference]` section: potentials and message passing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    pub tau: Option<f64>,
    pub iterations: Option<usize>,
    pub damping: Option<f64>,
    pub epsilon: Option<f64>,
    pub na_layers: Option<usize>,
}

/// `[zero_shot]` section: anchor construction without labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroShotSection {
    pub samples_per_class: Option<usize>,
    pub k_top: Option<usize>,
}

/// `[ratio]` section: homophily estimation sampling.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatioSection {
    pub sample_size: Option<usize>,
    pub trials: Option<usize>,
    pub concurrency: Option<usize>,
    pub text_budget: Option<usize>,
}

/// `[chat]` section: provider decoding and transport.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChatSection {
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub endpoint: Option<String>,
    pub timeout_secs: Option<u64>,
    /// Directory for the on-disk response cache; unset disables caching.
    pub cache_dir: Option<PathBuf>,
}

/// The whole config file. Missing sections behave as empty ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub inference: InferenceSection,
    pub zero_shot: ZeroShotSection,
    pub ratio: RatioSection,
    pub chat: ChatSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Three-layer precedence: CLI flag beats config file beats default.
pub fn resolve<T>(cli: Option<T>, file: Option<T>, fallback: T) -> T {
    cli.or(file).unwrap_or(fallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn full_file_parses() {
        let text = r#"
[inference]
tau = 0.05
iterations = 3
damping = 0.9

[zero_shot]
samples_per_class = 10

[ratio]
sample_size = 64
trials = 3

[chat]
model = "test-model"
cache_dir = "/tmp/cache"
"#;
        let config: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(config.inference.tau, Some(0.05));
        assert_eq!(config.inference.iterations, Some(3));
        assert_eq!(config.inference.epsilon, None);
        assert_eq!(config.zero_shot.samples_per_class, Some(10));
        assert_eq!(config.ratio.sample_size, Some(64));
        assert_eq!(config.chat.model.as_deref(), Some("test-model"));
        assert_eq!(config.chat.cache_dir, Some(PathBuf::from("/tmp/cache")));
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let config: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(config, PipelineConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<PipelineConfig>("[inference]\ntemperature = 1.0\n");
        assert!(err.is_err(), "misplaced key should not parse");
    }

    #[test]
    fn load_reports_path_on_parse_error() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "not [valid toml").unwrap();
        let err = PipelineConfig::load(file.path()).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }));
        assert!(err.to_string().contains(file.path().to_str().unwrap()));
    }

    #[test]
    fn resolve_precedence() {
        assert_eq!(resolve(Some(1), Some(2), 3), 1);
        assert_eq!(resolve(None, Some(2), 3), 2);
        assert_eq!(resolve::<i32>(None, None, 3), 3);
    }
}
