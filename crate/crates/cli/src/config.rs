//! Run settings: built-in defaults, the bits environment variable, a flat
//! `key = value` file, then command-line flags, each overriding the last.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use thiserror::Error;

use multipoint_core::bigreal::DEFAULT_BITS;
use multipoint_core::tables::DEFAULT_TNFE;

/// Sets the default working precision in bits.
pub const BITS_ENV: &str = "MULTIPOINT_BITS";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },
    #[error("{path}:{line}: unknown key {key:?}")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("invalid {key} {value:?}: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Records,
}

impl Format {
    fn parse(s: &str) -> Option<Format> {
        Format::from_str(s, true).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub bits: u32,
    pub tnfe: u32,
    /// Column labels or method specs to keep; empty keeps all.
    pub methods: Vec<String>,
    /// Function ids to keep; empty keeps all.
    pub functions: Vec<String>,
    pub format: Format,
    /// Largest exponent difference accepted by `bench --check`.
    pub exponent_slack: i64,
    /// Largest COC difference accepted by `bench --check`.
    pub coc_slack: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            bits: DEFAULT_BITS,
            tnfe: DEFAULT_TNFE,
            methods: Vec::new(),
            functions: Vec::new(),
            format: Format::Text,
            exponent_slack: 0,
            coc_slack: 0.0,
        }
    }
}

pub const KEYS: [&str; 7] = [
    "bits",
    "tnfe",
    "methods",
    "functions",
    "format",
    "exponent_slack",
    "coc_slack",
];

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        value: value.into(),
        reason: reason.to_string(),
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl BenchConfig {
    /// Defaults with the environment applied.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut cfg = BenchConfig::default();
        if let Ok(v) = std::env::var(BITS_ENV) {
            cfg.set(BITS_ENV, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "bits" | BITS_ENV => self.bits = value.parse().map_err(|e| bad(key, value, e))?,
            "tnfe" => self.tnfe = value.parse().map_err(|e| bad(key, value, e))?,
            "methods" => self.methods = list(value),
            "functions" => self.functions = list(value),
            "format" => {
                self.format = Format::parse(value)
                    .ok_or_else(|| bad(key, value, "expected text, csv or records"))?
            }
            "exponent_slack" => {
                self.exponent_slack = value.parse().map_err(|e| bad(key, value, e))?
            }
            "coc_slack" => {
                let v: f64 = value.parse().map_err(|e| bad(key, value, e))?;
                if v.is_nan() || v < 0.0 {
                    return Err(bad(key, value, "must be nonnegative"));
                }
                self.coc_slack = v;
            }
            _ => return Err(bad(key, value, "unknown key")),
        }
        Ok(())
    }

    /// Applies a config file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        self.apply_text(&text, path)
    }

    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: path.into(),
                    line: i + 1,
                });
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    path: path.into(),
                    line: i + 1,
                    key: key.into(),
                });
            }
            self.set(key, value)?;
        }
        Ok(())
    }
}
