//! `key = value` configuration files.
//!
//! Keys are the long flag names of the command line, with `-` and `_`
//! treated alike. Lines starting with `#` and blank lines are ignored. A
//! flag given on the command line always wins over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("config key {key:?} has unusable value {value:?}")]
    BadValue { key: String, value: String },
}

/// Every key any subcommand reads.
pub const KNOWN_KEYS: &[&str] = &[
    "amr_vocab",
    "batch_size",
    "checkpoint",
    "chunk_size",
    "conllu",
    "conv1_filters",
    "conv2_filters",
    "data",
    "dep_vocab",
    "dev_frac",
    "embed_dim",
    "epochs",
    "gold",
    "gold_sembank",
    "hidden",
    "lambda",
    "lambdas",
    "lr",
    "max_ops",
    "min_freq",
    "no_dep",
    "out_dims",
    "out_dir",
    "parses",
    "pooling",
    "records",
    "restarts",
    "seed",
    "split",
    "synthetic",
    "test_frac",
    "threads",
    "train_frac",
];

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |reason: String| ConfigFileError::Syntax { line: i + 1, reason };
            let (k, v) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`".into()))?;
            let key = normalize_key(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(syntax(format!("unknown key {key:?}")));
            }
            if values.insert(key.clone(), v.trim().to_owned()).is_some() {
                return Err(syntax(format!("key {key:?} given twice")));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigFileError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigFileError> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| ConfigFileError::BadValue { key: key.to_owned(), value: v.to_owned() }))
            .transpose()
    }

    /// The command-line value, else the file's, else `default`.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, ConfigFileError> {
        Ok(match cli {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    /// Like [`pick`](Self::pick) without a default.
    pub fn pick_opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, ConfigFileError> {
        Ok(match cli {
            Some(v) => Some(v),
            None => self.get(key)?,
        })
    }

    /// A boolean switch: set by the flag, or by `true`/`false` in the file.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool, ConfigFileError> {
        Ok(cli || self.get(key)?.unwrap_or(false))
    }
}
