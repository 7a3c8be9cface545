//! Optional TOML run configuration.
//!
//! Keys are the long flag names (`seed-count = 20`). Top-level keys apply to
//! every subcommand; a table named after the subcommand (`[detect]`) takes
//! precedence over them, and flags take precedence over both.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    table: toml::Table,
    section: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, subcommand: &str) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let section = match table.get(subcommand) {
            Some(toml::Value::Table(t)) => Some(t.clone()),
            Some(_) => {
                return Err(CliError::Config(format!(
                    "{}: `{subcommand}` must be a table",
                    path.display()
                )))
            }
            None => None,
        };
        Ok(FileConfig { table, section })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.section
            .as_ref()
            .and_then(|s| s.get(key))
            .or_else(|| self.table.get(key))
    }

    /// The flag value if given, otherwise the file value.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))),
        }
    }

    /// A boolean switch: set by the flag, else by the file, else false.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    /// Repeated flag values if any were given, otherwise the file's array
    /// (a single string is accepted as a one-element list).
    pub fn list<T: DeserializeOwned>(&self, flag: Vec<T>, key: &str) -> Result<Vec<T>, CliError> {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.lookup(key) {
            None => Ok(Vec::new()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.clone()
                        .try_into()
                        .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))
                })
                .collect(),
            Some(v) => Ok(vec![v
                .clone()
                .try_into()
                .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))?]),
        }
    }
}
