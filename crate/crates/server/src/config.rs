//! Service configuration: one TOML file plus environment overrides.
//!
//! | variable           | overrides       |
//! |--------------------|-----------------|
//! | `SMA_CONFIG`       | config file path |
//! | `SMA_PORT`         | `port`          |
//! | `SMA_DATA_DIR`     | `data_dir`      |
//! | `SMA_FIXTURE_DIR`  | `fixture_dir`   |
//! | `SMA_RESOURCES_DIR`| `resources_dir` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sma_core::adapters::{default_capabilities, BudgetConfig};
use sma_core::query::{Operator, PlatformCapabilities};
use sma_core::Platform;
use thiserror::Error;

pub const DEFAULT_CONFIG_PATH: &str = "config/sma.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid value for {var}: {value:?}")]
    Env { var: &'static str, value: String },
    #[error("invalid capability profile for {platform}: {message}")]
    Capabilities { platform: Platform, message: String },
}

/// Partial override of a shipped capability profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityOverride {
    pub operators: Option<Vec<Operator>>,
    pub native_geo_filter: Option<bool>,
    pub native_time_filter: Option<bool>,
    pub keyword_search: Option<bool>,
    pub max_results_per_request: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub host: String,
    pub port: u16,
    /// Storage directory; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub fixture_dir: PathBuf,
    /// Lexicons and stopword lists; `None` uses the compiled-in copies.
    pub resources_dir: Option<PathBuf>,
    pub budgets: BTreeMap<Platform, BudgetConfig>,
    pub capabilities: BTreeMap<Platform, CapabilityOverride>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: None,
            fixture_dir: PathBuf::from("fixtures"),
            resources_dir: None,
            budgets: BTreeMap::new(),
            capabilities: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads `path` (or `SMA_CONFIG`, or the default path when it exists),
    /// then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os("SMA_CONFIG").map(PathBuf::from);
        let chosen = path.map(Path::to_path_buf).or(env_path);
        let mut cfg = match chosen {
            Some(p) => Self::read(&p)?,
            None if Path::new(DEFAULT_CONFIG_PATH).exists() => {
                Self::read(Path::new(DEFAULT_CONFIG_PATH))?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("SMA_PORT") {
            self.port = v.trim().parse().map_err(|_| ConfigError::Env {
                var: "SMA_PORT",
                value: v,
            })?;
        }
        if let Some(v) = get("SMA_DATA_DIR") {
            self.data_dir = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = get("SMA_FIXTURE_DIR") {
            self.fixture_dir = PathBuf::from(v);
        }
        if let Some(v) = get("SMA_RESOURCES_DIR") {
            self.resources_dir = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        Ok(())
    }

    /// Shipped profiles with the configured overrides applied.
    pub fn capability_profiles(
        &self,
    ) -> Result<BTreeMap<Platform, PlatformCapabilities>, ConfigError> {
        let mut out = BTreeMap::new();
        for p in Platform::ALL {
            let mut caps = default_capabilities(p);
            if let Some(o) = self.capabilities.get(&p) {
                if let Some(ops) = &o.operators {
                    caps.operators = ops.iter().copied().collect();
                }
                if let Some(v) = o.native_geo_filter {
                    caps.native_geo_filter = v;
                }
                if let Some(v) = o.native_time_filter {
                    caps.native_time_filter = v;
                }
                if let Some(v) = o.keyword_search {
                    caps.keyword_search = v;
                }
                if let Some(v) = o.max_results_per_request {
                    caps.max_results_per_request = v;
                }
            }
            caps.check().map_err(|e| ConfigError::Capabilities {
                platform: p,
                message: e.to_string(),
            })?;
            out.insert(p, caps);
        }
        Ok(out)
    }

    pub fn base_url(&self) -> String {
        format!("http://{}:{}", self.host, self.port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses() {
        let text = include_str!("../../../config/sma.toml");
        let cfg = Config::from_toml(text, Path::new("sma.toml")).unwrap();
        assert_eq!(cfg.fixture_dir, PathBuf::from("fixtures"));
        assert_eq!(cfg.budgets[&Platform::Twitter].capacity, 180);
        assert_eq!(
            cfg.capability_profiles().unwrap()[&Platform::Facebook].max_results_per_request,
            25
        );
    }

    #[test]
    fn env_overrides() {
        let mut cfg = Config::default();
        let env: BTreeMap<&str, &str> = [("SMA_PORT", "9999"), ("SMA_DATA_DIR", "/tmp/x")].into();
        cfg.apply_env(|k| env.get(k).map(|s| s.to_string()))
            .unwrap();
        assert_eq!(cfg.port, 9999);
        assert_eq!(cfg.data_dir, Some(PathBuf::from("/tmp/x")));
        assert!(cfg
            .apply_env(|k| (k == "SMA_PORT").then(|| "http".to_string()))
            .is_err());
    }

    #[test]
    fn overrides_are_checked() {
        let cfg = Config::from_toml(
            "[capabilities.instagram]\noperators = [\"AND\"]\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert!(cfg.capability_profiles().is_err());
        let cfg = Config::from_toml(
            "[capabilities.facebook]\nmax_results_per_request = 10\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(
            cfg.capability_profiles().unwrap()[&Platform::Facebook].max_results_per_request,
            10
        );
        assert!(Config::from_toml("bogus = 1", Path::new("x.toml")).is_err());
    }
}
