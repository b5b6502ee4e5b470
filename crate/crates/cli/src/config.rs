//! key=value run configuration.
//!
//! Settings resolve in a fixed order: built-in defaults, then the config
//! file, then command-line flags. A config file may only hold keys its
//! command understands; unknown keys are an input error, not a warning.

use std::path::Path;
use std::str::FromStr;

use cliniseq_core::{Error, Result};

/// Parsed config file: (key, value) pairs in file order.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    pub pairs: Vec<(String, String)>,
}

impl KvFile {
    /// Lines are `key = value`; blank lines and `#` comments are skipped.
    pub fn parse(content: &str) -> Result<KvFile> {
        let mut pairs = Vec::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {}: expected key=value, got {line:?}", idx + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse(format!("config line {}: empty key", idx + 1)));
            }
            pairs.push((key.to_string(), value.trim().to_string()));
        }
        Ok(KvFile { pairs })
    }

    pub fn load(path: &Path) -> Result<KvFile> {
        let content = std::fs::read_to_string(path)?;
        KvFile::parse(&content)
    }

    /// Loads the file when given, otherwise yields no pairs.
    pub fn load_optional(path: Option<&Path>) -> Result<KvFile> {
        match path {
            Some(p) => KvFile::load(p),
            None => Ok(KvFile::default()),
        }
    }
}

/// Parses one config value, naming the key on failure.
pub fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::InvalidInput(format!(
            "config key {key:?}: cannot parse {value:?} as {}",
            std::any::type_name::<T>()
        ))
    })
}

/// Error for a key the command does not understand.
pub fn unknown_key(command: &str, key: &str) -> Error {
    Error::InvalidInput(format!("unknown config key {key:?} for {command}"))
}
