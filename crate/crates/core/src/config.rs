//! String key/value configuration passed to backends at creation.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Environment variable that replaces `/sys` for every sysfs-backed backend.
pub const SYSFS_ROOT_ENV: &str = "PMT_SYSFS_ROOT";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses `key` if present; a present but malformed value is an error.
    pub fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.trim().parse().map(Some).map_err(|e| {
                Error::InvalidConfig(format!("{key}={raw:?}: {e}"))
            }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl<K: Into<String>, V: ToString> FromIterator<(K, V)> for Config {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut config = Config::new();
        for (k, v) in iter {
            config.set(k, v);
        }
        config
    }
}

impl FromStr for Config {
    type Err = Error;

    /// Parses `key=value` pairs separated by `;` or `,`.
    fn from_str(s: &str) -> Result<Self> {
        let mut config = Config::new();
        for pair in s.split([';', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {pair:?}")))?;
            config.set(k.trim(), v.trim());
        }
        Ok(config)
    }
}

/// Resolves the directory for a sysfs class such as `powercap`.
///
/// Precedence: the explicit `key` in `config`, then `sysfs_root` in `config`
/// or `$PMT_SYSFS_ROOT` joined with `class/<class>`, then `/sys/class/<class>`.
pub(crate) fn sysfs_class_dir(config: &Config, key: &str, class: &str) -> std::path::PathBuf {
    use std::path::PathBuf;
    if let Some(dir) = config.get(key) {
        return PathBuf::from(dir);
    }
    let root = config
        .get("sysfs_root")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(SYSFS_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("/sys"));
    root.join("class").join(class)
}
