//! Optional key-value config file. Keys use the long flag names, with either
//! dashes or underscores (`gamma-a = 1.0` or `gamma_a = 1.0`).

use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::invalid_parameters(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::invalid_parameters(format!("bad config file: {e}")))?;
        Ok(Self { table })
    }

    fn raw(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(key)
            .or_else(|| self.table.get(&key.replace('-', "_")))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(type_error(key, "a number", other)),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(other) => Err(type_error(key, "a non-negative integer", other)),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(type_error(key, "a string", other)),
        }
    }

    /// String value parsed with `FromStr` (enums such as `mode`).
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.string(key)?
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::invalid_parameters(format!("config key {key}: {e}")))
            })
            .transpose()
    }
}

fn type_error(key: &str, expected: &str, found: &toml::Value) -> CliError {
    CliError::invalid_parameters(format!(
        "config key {key} must be {expected}, found {}",
        found.type_str()
    ))
}
