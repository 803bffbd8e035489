//! Flat `section.key = value` configuration files.
//!
//! Blank lines and everything after `#` are ignored. Keys must contain a dot
//! and may appear once. Lists are comma separated.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("{origin}:{}", n + 1),
                    "expected `section.key = value`",
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            let well_formed = key
                .split_once('.')
                .is_some_and(|(s, k)| !s.is_empty() && !k.is_empty());
            if !well_formed || key.contains(char::is_whitespace) {
                return Err(Error::config(
                    key,
                    format!("{origin}:{}: malformed key", n + 1),
                ));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::config(
                    key,
                    format!("{origin}:{}: duplicate key", n + 1),
                ));
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Entries of `other` replace entries of `self`.
    pub fn overlay(mut self, other: ConfigMap) -> Self {
        self.entries.extend(other.entries);
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::config(key, format!("cannot parse list item `{s}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}
