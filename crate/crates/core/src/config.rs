//! Service configuration: `service.conf`, then `SCHOLARLENS_*` environment
//! variables, then explicit overrides, each layer replacing the last.
//!
//! ```ini
//! [service]
//! bind = 127.0.0.1
//! port = 8080
//! ontology = fixtures/ontologies/cs.onto
//! sources_dir = sources
//! cache_dir = .cache/scholarlens
//! cache_ttl_secs = 86400
//! cors_origins = http://localhost:5173
//! ui_dir =
//! ```
//!
//! Every key has an environment variable named after it, e.g.
//! `SCHOLARLENS_CACHE_DIR`. Relative paths in the file resolve against the
//! file's directory; relative paths from the environment or overrides
//! resolve against the working directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use ini::Ini;
use thiserror::Error;

use crate::ontology::Ontology;
use crate::sources::{CacheStore, FetchContext, Registry, DEFAULT_TTL};

pub const ENV_PREFIX: &str = "SCHOLARLENS_";

pub const KEYS: &[&str] = &["bind", "port", "ontology", "sources_dir", "cache_dir", "cache_ttl_secs", "cors_origins", "ui_dir"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("{0}")]
    Load(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Merged into one ontology at startup.
    pub ontology_paths: Vec<PathBuf>,
    pub sources_dir: PathBuf,
    /// `None` disables the page cache.
    pub cache_dir: Option<PathBuf>,
    pub cache_ttl: Duration,
    pub cors_origins: Vec<String>,
    /// Static web UI assets served under `/` when set.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            ontology_paths: vec![PathBuf::from("fixtures/ontologies/cs.onto")],
            sources_dir: PathBuf::from("sources"),
            cache_dir: Some(PathBuf::from(".cache/scholarlens")),
            cache_ttl: DEFAULT_TTL,
            cors_origins: Vec::new(),
            ui_dir: None,
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

impl ServiceConfig {
    /// Sets one key; relative paths are joined onto `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), ConfigError> {
        let value = value.trim();
        let path = |v: &str| base.join(v);
        match key {
            "bind" => self.bind = value.to_string(),
            "port" => self.port = value.parse().map_err(|_| bad(key, format!("`{value}` is not a port")))?,
            "ontology" => {
                let paths: Vec<PathBuf> = list(value).iter().map(|p| path(p)).collect();
                if paths.is_empty() {
                    return Err(bad(key, "at least one ontology file is required"));
                }
                self.ontology_paths = paths;
            }
            "sources_dir" => self.sources_dir = path(value),
            "cache_dir" => self.cache_dir = (!value.is_empty()).then(|| path(value)),
            "cache_ttl_secs" => {
                let secs: u64 = value.parse().map_err(|_| bad(key, format!("`{value}` is not a number of seconds")))?;
                self.cache_ttl = Duration::from_secs(secs);
            }
            "cors_origins" => self.cors_origins = list(value),
            "ui_dir" => self.ui_dir = (!value.is_empty()).then(|| path(value)),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn from_conf(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Read {
            path: "<text>".into(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::default();
        cfg.ontology_paths = cfg.ontology_paths.iter().map(|p| base.join(p)).collect();
        cfg.sources_dir = base.join(&cfg.sources_dir);
        cfg.cache_dir = cfg.cache_dir.map(|d| base.join(d));
        if let Some(sec) = ini.section(Some("service")) {
            for (k, v) in sec.iter() {
                cfg.set(k, v, base)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_conf(&text, base).map_err(|e| match e {
            ConfigError::Read { message, .. } => ConfigError::Read {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Applies `SCHOLARLENS_<KEY>` variables from `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if KEYS.contains(&key.as_str()) {
                self.set(&key, v.as_ref(), Path::new(""))?;
            }
        }
        Ok(())
    }

    pub fn apply_process_env(&mut self) -> Result<(), ConfigError> {
        self.apply_env(std::env::vars())
    }

    pub fn load_ontology(&self) -> Result<Ontology, ConfigError> {
        let parts = self
            .ontology_paths
            .iter()
            .map(|p| Ontology::load(p).map_err(|e| ConfigError::Load(format!("{}: {e}", p.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        if let [one] = parts.as_slice() {
            return Ok(one.clone());
        }
        Ontology::merge("ontology", &parts).map_err(|e| ConfigError::Load(e.to_string()))
    }

    pub fn load_registry(&self) -> Result<Registry, ConfigError> {
        Registry::load(&self.sources_dir).map_err(|e| ConfigError::Load(e.to_string()))
    }

    pub fn fetch_context(&self) -> FetchContext {
        match &self.cache_dir {
            Some(dir) => FetchContext::with_cache(CacheStore::new(dir, self.cache_ttl)),
            None => FetchContext::default(),
        }
    }
}
