//! Run configuration read from a `key = value` file, with per-key overrides.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::annotations::GoAspect;
use crate::curie::Curie;
use crate::probe::ProviderConfig;
use crate::report::BinSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("`{0}` is required for this command")]
    Missing(&'static str),
    #[error("{key} does not exist: {}", path.display())]
    NotFound { key: &'static str, path: PathBuf },
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnotationFormat {
    #[default]
    Hpoa,
    Swissprot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ontology_path: Option<PathBuf>,
    pub annotation_path: Option<PathBuf>,
    pub annotation_format: AnnotationFormat,
    pub annotation_aspect: Option<GoAspect>,
    pub root_override: Option<Curie>,
    pub corpus_cache_path: Option<PathBuf>,
    pub probe_cache_path: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub offline: bool,
    pub zipf_sample: usize,
    pub zipf_jitter: f64,
    pub bins: BinSpec,
    pub max_orphans: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ontology_path: None,
            annotation_path: None,
            annotation_format: AnnotationFormat::Hpoa,
            annotation_aspect: None,
            root_override: None,
            corpus_cache_path: None,
            probe_cache_path: None,
            provider: ProviderConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            offline: false,
            zipf_sample: 2000,
            zipf_jitter: 0.05,
            bins: BinSpec::default(),
            max_orphans: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "ontology_path",
    "annotation_path",
    "annotation_format",
    "annotation_aspect",
    "root",
    "corpus_cache",
    "probe_cache",
    "output_dir",
    "seed",
    "offline",
    "model",
    "endpoint",
    "api_key_env",
    "temperature",
    "max_tokens",
    "concurrency",
    "zipf_sample",
    "zipf_jitter",
    "bins",
    "max_orphans",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        message: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            message: format!("expected a boolean, got `{value}`"),
        }),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "ontology_path" => self.ontology_path = optional_path(value),
            "annotation_path" => self.annotation_path = optional_path(value),
            "annotation_format" => {
                self.annotation_format = match value.to_ascii_lowercase().as_str() {
                    "hpoa" => AnnotationFormat::Hpoa,
                    "swissprot" => AnnotationFormat::Swissprot,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            message: "expected `hpoa` or `swissprot`".into(),
                        })
                    }
                }
            }
            "annotation_aspect" => {
                self.annotation_aspect = if value.is_empty() {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "root" => {
                self.root_override = if value.is_empty() {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "corpus_cache" => self.corpus_cache_path = optional_path(value),
            "probe_cache" => self.probe_cache_path = optional_path(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "offline" => self.offline = parse_bool(key, value)?,
            "model" => self.provider.model = value.to_string(),
            "endpoint" => self.provider.endpoint = value.to_string(),
            "api_key_env" => self.provider.api_key_env = value.to_string(),
            "temperature" => self.provider.temperature = parse(key, value)?,
            "max_tokens" => {
                self.provider.max_tokens = if value.is_empty() {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "concurrency" => {
                let n: usize = parse(key, value)?;
                self.provider.concurrency = n.max(1);
            }
            "zipf_sample" => self.zipf_sample = parse(key, value)?,
            "zipf_jitter" => self.zipf_jitter = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "max_orphans" => self.max_orphans = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), ConfigError> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::BadValue {
                key: o.to_string(),
                message: "override must look like key=value".into(),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Checks that every configured input file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, path) in [
            ("ontology_path", &self.ontology_path),
            ("annotation_path", &self.annotation_path),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ConfigError::NotFound {
                        key,
                        path: p.clone(),
                    });
                }
            }
        }
        if !(self.zipf_jitter.is_finite() && self.zipf_jitter >= 0.0) {
            return Err(ConfigError::BadValue {
                key: "zipf_jitter".into(),
                message: "must be finite and non-negative".into(),
            });
        }
        Ok(())
    }

    pub fn ontology(&self) -> Result<&Path, ConfigError> {
        self.ontology_path
            .as_deref()
            .ok_or(ConfigError::Missing("ontology_path"))
    }

    pub fn annotations(&self) -> Result<&Path, ConfigError> {
        self.annotation_path
            .as_deref()
            .ok_or(ConfigError::Missing("annotation_path"))
    }

    /// Explicit path or `<output_dir>/<default_name>`.
    pub fn corpus_cache(&self) -> PathBuf {
        self.corpus_cache_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("corpus_cache.jsonl"))
    }

    pub fn probe_cache(&self) -> PathBuf {
        self.probe_cache_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("probe_cache.jsonl"))
    }
}
