//! Flat `key = value` parameters merged from a config file and flags.
//!
//! File format: one `key = value` per line; blank lines and lines starting
//! with `#` are ignored; keys use the flag spelling without the leading
//! dashes (`rho-min`, `replications`), and `_` is accepted for `-`. A key
//! may appear once per file. Flags override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Validated-on-read string parameters of one subcommand.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize_key(key), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `other` wins on conflicts.
    pub fn merge(&mut self, other: Params) {
        self.values.extend(other.values);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::validation(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn required<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.optional(key)?
            .ok_or_else(|| CliError::validation(format!("missing required key `{key}`")))
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<T>().map_err(|_| {
                            CliError::validation(format!("invalid list item `{item}` for `{key}`"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Parses config text; `allowed` lists the keys the subcommand accepts.
pub fn parse_config(text: &str, allowed: &[&str]) -> CliResult<Params> {
    let mut params = Params::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("line {lineno}: expected `key = value`")))?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(CliError::validation(format!("line {lineno}: empty key")));
        }
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::validation(format!("line {lineno}: unknown key `{key}`")));
        }
        if params.contains(&key) {
            return Err(CliError::validation(format!("line {lineno}: duplicate key `{key}`")));
        }
        params.set(&key, value.trim());
    }
    Ok(params)
}

pub fn load_config(path: &Path, allowed: &[&str]) -> CliResult<Params> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::validation(format!("cannot read config `{}`: {e}", path.display()))
    })?;
    parse_config(&text, allowed)
}
