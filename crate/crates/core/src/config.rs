//! Run configuration: a TOML file, overridden by environment variables,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::DiffConfig;
use crate::explore::ExploreConfig;
use crate::perception::gateway::{ParserEndpoint, RetryPolicy, VlmEndpoint, DEFAULT_MAX_PAYLOAD_BYTES};

pub const ENV_VLM_URL: &str = "SWIPEKIT_VLM_URL";
pub const ENV_VLM_MODEL: &str = "SWIPEKIT_VLM_MODEL";
pub const ENV_VLM_TOKEN: &str = "SWIPEKIT_VLM_TOKEN";
pub const ENV_PARSER_URL: &str = "SWIPEKIT_PARSER_URL";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VlmSection {
    pub url: Option<String>,
    pub model: Option<String>,
    /// Prefer the environment variable for secrets.
    pub auth_token: Option<String>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub max_payload_bytes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParserSection {
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// ADB serial of a real device or emulator.
    pub adb: Option<String>,
    /// Path to the `adb` binary.
    pub adb_path: Option<String>,
    /// Scene file or built-in fixture name for the simulator.
    pub sim: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceBackend {
    Adb { serial: String, adb_path: Option<String> },
    Sim { scene: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub out: Option<PathBuf>,
    pub vlm: VlmSection,
    pub parser: ParserSection,
    pub diff: DiffConfig,
    pub explore: ExploreConfig,
    pub device: DeviceSection,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.into(), message })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Applies endpoint settings from the environment through `get`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        let get = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get(ENV_VLM_URL) {
            self.vlm.url = Some(v);
        }
        if let Some(v) = get(ENV_VLM_MODEL) {
            self.vlm.model = Some(v);
        }
        if let Some(v) = get(ENV_VLM_TOKEN) {
            self.vlm.auth_token = Some(v);
        }
        if let Some(v) = get(ENV_PARSER_URL) {
            self.parser.url = Some(v);
        }
    }

    pub fn vlm_endpoint(&self) -> Option<VlmEndpoint> {
        let url = self.vlm.url.clone()?;
        let defaults = RetryPolicy::default();
        Some(VlmEndpoint {
            url,
            model: self.vlm.model.clone().unwrap_or_else(|| "default".into()),
            auth_token: self.vlm.auth_token.clone(),
            retry: RetryPolicy {
                max_retries: self.vlm.max_retries.unwrap_or(defaults.max_retries),
                backoff_ms: self.vlm.backoff_ms.unwrap_or(defaults.backoff_ms),
            },
            max_payload_bytes: self.vlm.max_payload_bytes.unwrap_or(DEFAULT_MAX_PAYLOAD_BYTES),
        })
    }

    pub fn parser_endpoint(&self) -> Option<ParserEndpoint> {
        self.parser.url.clone().map(ParserEndpoint::new)
    }

    pub fn backend(&self) -> Result<DeviceBackend, ConfigError> {
        match (&self.device.adb, &self.device.sim) {
            (Some(serial), None) => {
                Ok(DeviceBackend::Adb { serial: serial.clone(), adb_path: self.device.adb_path.clone() })
            }
            (None, Some(scene)) => Ok(DeviceBackend::Sim { scene: scene.clone() }),
            (Some(_), Some(_)) => Err(ConfigError::Invalid("select either an adb serial or a sim scene, not both".into())),
            (None, None) => Err(ConfigError::Invalid("no device selected; pass --serial or --sim".into())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.diff.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.explore.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn parse_and_env_precedence() {
        let mut cfg = AppConfig::parse(
            r#"
out = "data"
[vlm]
url = "http://file"
model = "m"
[device]
sim = "feed"
[explore]
max_steps = 5
[diff]
tau = 0.01
"#,
        )
        .unwrap();
        assert_eq!(cfg.explore.max_steps, 5);
        assert_eq!(cfg.diff.tau, 0.01);
        assert_eq!(cfg.diff.delta, 0.02);
        let env = HashMap::from([(ENV_VLM_URL, "http://env"), (ENV_VLM_TOKEN, "secret")]);
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string()));
        let ep = cfg.vlm_endpoint().unwrap();
        assert_eq!(ep.url, "http://env");
        assert_eq!(ep.model, "m");
        assert_eq!(ep.auth_token.as_deref(), Some("secret"));
        assert_eq!(cfg.backend().unwrap(), DeviceBackend::Sim { scene: "feed".into() });
    }

    #[test]
    fn exactly_one_backend() {
        let mut cfg = AppConfig::default();
        assert!(cfg.backend().is_err());
        cfg.device.adb = Some("emulator-5554".into());
        assert!(cfg.backend().is_ok());
        cfg.device.sim = Some("feed".into());
        assert!(cfg.backend().is_err());
    }

    #[test]
    fn unknown_keys_and_bad_thresholds() {
        assert!(AppConfig::parse("bogus = 1").is_err());
        let cfg = AppConfig::parse("[diff]\ntau = 2.0").unwrap();
        assert!(cfg.validate().is_err());
    }
}
