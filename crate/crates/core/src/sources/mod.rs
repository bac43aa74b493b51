//! Portal adapters: configuration, page fetching with caching and
//! politeness, and the per-source run that turns pages into records.
//!
//! Every source lives in its own directory:
//!
//! ```text
//! sources/<id>/adapter.conf     adapter settings
//! sources/<id>/rules.conf       extraction ruleset
//! sources/<id>/fixtures/<query-slug>/page<N>.<html|json>
//! ```

mod adapter;
mod cache;
mod http;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use serde::Serialize;
use thiserror::Error;

use crate::extraction::ExtractionRuleSet;

pub use adapter::{build_url, fetch_page, run_adapter, FetchContext, FetchOutcome, FetchedPage};
pub use cache::{CacheStore, DEFAULT_TTL};
pub use http::{Clock, HttpClient, HttpResponse, SystemClock, UreqClient};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("config error in {path}: {message}")]
    Config { path: String, message: String },
    #[error("source `{0}` is configured twice")]
    Duplicate(String),
}

fn config_err(path: &Path, message: impl Into<String>) -> SourceError {
    SourceError::Config {
        path: path.display().to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FetchError {
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("http status {0}")]
    HttpStatus(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("bad url `{0}`")]
    BadUrl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Fixture,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Fixture => "fixture",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "live" => Ok(Self::Live),
            "fixture" => Ok(Self::Fixture),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterConfig {
    pub source_id: String,
    pub display_name: String,
    pub base_url: String,
    /// Path and query appended to `base_url`; must contain `{terms}`.
    pub query_template: String,
    pub ruleset_path: PathBuf,
    pub max_pages: usize,
    pub timeout_ms: u64,
    pub min_request_interval_ms: u64,
    pub mode: Mode,
    /// Root of `<query-slug>/page<N>.<ext>`; required in fixture mode.
    pub fixture_dir: Option<PathBuf>,
    /// Optional single request header, e.g. an API key.
    pub header: Option<(String, String)>,
}

impl AdapterConfig {
    /// Reads `[adapter]` from `path`; relative paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_conf(&text, base).map_err(|m| config_err(path, m))
    }

    pub fn from_conf(text: &str, base_dir: &Path) -> Result<Self, String> {
        let ini = Ini::load_from_str(text).map_err(|e| e.to_string())?;
        let sec = ini.section(Some("adapter")).ok_or("missing [adapter] section")?;
        let get = |k: &str| sec.get(k).map(str::trim).filter(|v| !v.is_empty());
        let require = |k: &str| get(k).ok_or_else(|| format!("missing `{k}`"));
        let number = |k: &str, default: u64| -> Result<u64, String> {
            get(k).map_or(Ok(default), |v| v.parse().map_err(|_| format!("`{k}` must be a non-negative integer")))
        };

        let source_id = require("source_id")?.to_string();
        let cfg = Self {
            display_name: get("display_name").unwrap_or(&source_id).to_string(),
            base_url: require("base_url")?.trim_end_matches('/').to_string(),
            query_template: require("query_template")?.to_string(),
            ruleset_path: base_dir.join(get("ruleset").unwrap_or("rules.conf")),
            max_pages: number("max_pages", 1)? as usize,
            timeout_ms: number("timeout_ms", 10_000)?,
            min_request_interval_ms: number("min_request_interval_ms", 1_000)?,
            mode: get("mode").unwrap_or("fixture").parse()?,
            fixture_dir: get("fixture_dir").map(|d| base_dir.join(d)),
            header: match get("header") {
                Some(h) => {
                    let (k, v) = h.split_once(':').ok_or("`header` must look like `Name: value`")?;
                    Some((k.trim().to_string(), v.trim().to_string()))
                }
                None => None,
            },
            source_id,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.source_id.is_empty() {
            return Err("empty source_id".into());
        }
        if !self.query_template.contains("{terms}") {
            return Err("query_template must contain `{terms}`".into());
        }
        if self.max_pages == 0 {
            return Err("max_pages must be positive".into());
        }
        if self.timeout_ms == 0 {
            return Err("timeout_ms must be positive".into());
        }
        url::Url::parse(&self.base_url).map_err(|e| format!("bad base_url: {e}"))?;
        if self.mode == Mode::Fixture && self.fixture_dir.is_none() {
            return Err("fixture mode needs `fixture_dir`".into());
        }
        Ok(())
    }
}

/// A configured source: settings plus its compiled-once ruleset.
#[derive(Debug, Clone)]
pub struct Adapter {
    pub config: AdapterConfig,
    pub rules: ExtractionRuleSet,
}

impl Adapter {
    pub fn new(config: AdapterConfig, rules: ExtractionRuleSet) -> Result<Self, SourceError> {
        if rules.source_id != config.source_id {
            return Err(config_err(
                &config.ruleset_path,
                format!("ruleset is for `{}`, adapter is `{}`", rules.source_id, config.source_id),
            ));
        }
        Ok(Self { config, rules })
    }

    pub fn load(adapter_conf: impl AsRef<Path>) -> Result<Self, SourceError> {
        let config = AdapterConfig::load(adapter_conf)?;
        let rules = ExtractionRuleSet::load(&config.ruleset_path)
            .map_err(|e| config_err(&config.ruleset_path, e.to_string()))?;
        Self::new(config, rules)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceInfo {
    pub source_id: String,
    pub display_name: String,
    pub mode: Mode,
}

/// All known sources, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    adapters: BTreeMap<String, Adapter>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_adapters(adapters: impl IntoIterator<Item = Adapter>) -> Result<Self, SourceError> {
        let mut reg = Self::empty();
        for a in adapters {
            reg.insert(a)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, adapter: Adapter) -> Result<(), SourceError> {
        let id = adapter.config.source_id.clone();
        if self.adapters.contains_key(&id) {
            return Err(SourceError::Duplicate(id));
        }
        self.adapters.insert(id, adapter);
        Ok(())
    }

    /// Loads every `<dir>/*/adapter.conf`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, SourceError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| config_err(dir, e.to_string()))?;
        let mut confs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path().join("adapter.conf")))
            .filter(|p| p.is_file())
            .collect();
        confs.sort();
        Self::from_adapters(confs.iter().map(Adapter::load).collect::<Result<Vec<_>, _>>()?)
    }

    /// Sorted by source id.
    pub fn list_sources(&self) -> Vec<SourceInfo> {
        self.adapters
            .values()
            .map(|a| SourceInfo {
                source_id: a.config.source_id.clone(),
                display_name: a.config.display_name.clone(),
                mode: a.config.mode,
            })
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&Adapter> {
        self.adapters.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.adapters.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.adapters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adapters.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sources_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../sources")
    }

    #[test]
    fn default_registry() {
        let reg = Registry::load(sources_dir()).unwrap();
        let ids: Vec<_> = reg.list_sources().into_iter().map(|s| (s.source_id, s.mode)).collect();
        assert_eq!(
            ids,
            [
                ("academic_graph".to_string(), Mode::Fixture),
                ("fixture_corpus".to_string(), Mode::Fixture),
                ("ieee_xplore".to_string(), Mode::Fixture)
            ]
        );
        assert!(Registry::empty().list_sources().is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let a = Adapter::load(sources_dir().join("ieee_xplore/adapter.conf")).unwrap();
        assert_eq!(
            Registry::from_adapters([a.clone(), a]).unwrap_err(),
            SourceError::Duplicate("ieee_xplore".into())
        );
    }

    #[test]
    fn duplicate_on_disk_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        for d in ["one", "two"] {
            let dst = tmp.path().join(d);
            std::fs::create_dir(&dst).unwrap();
            for f in ["adapter.conf", "rules.conf"] {
                std::fs::copy(sources_dir().join("ieee_xplore").join(f), dst.join(f)).unwrap();
            }
        }
        assert!(matches!(Registry::load(tmp.path()), Err(SourceError::Duplicate(_))));
    }

    #[test]
    fn config_validation() {
        let base = Path::new(".");
        let ok = "[adapter]\nsource_id = x\nbase_url = https://e.org/\nquery_template = /s?q={terms}\nmode = live\n";
        let cfg = AdapterConfig::from_conf(ok, base).unwrap();
        assert_eq!(cfg.base_url, "https://e.org");
        assert_eq!(cfg.max_pages, 1);
        assert!(AdapterConfig::from_conf(&ok.replace("{terms}", "x"), base).is_err());
        assert!(AdapterConfig::from_conf(&ok.replace("mode = live", "mode = fixture"), base).is_err());
        assert!(AdapterConfig::from_conf(&ok.replace("https://e.org/", "not a url"), base).is_err());
        let with_header = format!("{ok}header = X-Api-Key: abc:def\n");
        assert_eq!(
            AdapterConfig::from_conf(&with_header, base).unwrap().header,
            Some(("X-Api-Key".into(), "abc:def".into()))
        );
    }
}
