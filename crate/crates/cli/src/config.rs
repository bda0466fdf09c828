//! Flat `key = value` configuration. Files are TOML tables without sections;
//! every key is also a flag of the same name (dashes for underscores), and
//! flags win over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn from_file(path: &Path, allowed: &[&str]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, allowed)
    }

    pub fn from_toml(text: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config file: {e}")))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let key = key.replace('-', "_");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown config key `{key}`")));
            }
            values.insert(key, scalar_text(&value)?);
        }
        Ok(Self { values })
    }

    /// Flags given on the command line replace file values.
    pub fn overlay(&mut self, flags: Vec<(&'static str, Option<String>)>) {
        for (key, value) in flags {
            if let Some(v) = value {
                self.values.insert(key.to_string(), v);
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        self.get_opt(key).map(|v| v.unwrap_or(default))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Parse(format!("cannot parse `{key}` from `{s}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get_opt(key)?.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => parse_list(key, s),
        }
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Parse(format!("cannot parse `{key}` entry `{x}`"))))
        .collect()
}

fn scalar_text(value: &toml::Value) -> Result<String, CliError> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items.iter().map(scalar_text).collect::<Result<Vec<_>, _>>()?.join(","),
        other => return Err(CliError::Config(format!("unsupported config value `{other}`"))),
    })
}
