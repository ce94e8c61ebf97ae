//! Flat `key = value` run configuration.
//!
//! Values resolve in three layers: built-in defaults, then the `--config`
//! file, then command-line flags. The resolved map is what the manifest
//! echoes, so a manifest can be fed back with `--config`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// One recognised key with its default and a one-line description.
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    command: &'static str,
    values: BTreeMap<String, String>,
}

/// Parses a config file body. Blank lines and `#` comments are skipped.
pub fn parse_file(path: &Path) -> Result<Vec<(usize, String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::ConfigFile {
            path: path.to_path_buf(),
            line: n + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((n + 1, k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

impl Settings {
    /// Defaults for `keys`, overlaid by the config file and then by `flags`.
    pub fn resolve(
        command: &'static str,
        keys: &[Key],
        file: Option<&Path>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Settings, CliError> {
        let mut values: BTreeMap<String, String> = keys
            .iter()
            .map(|k| (k.name.to_owned(), k.default.to_owned()))
            .collect();
        if let Some(path) = file {
            for (line, k, v) in parse_file(path)? {
                if !values.contains_key(&k) {
                    return Err(CliError::ConfigFile {
                        path: path.to_path_buf(),
                        line,
                        reason: format!("unknown key `{k}` for `{command}`"),
                    });
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                debug_assert!(values.contains_key(k), "flag {k} has no key");
                values.insert(k.to_owned(), v);
            }
        }
        Ok(Settings { command, values })
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> CliError {
        CliError::Config {
            key: key.to_owned(),
            value: self.raw(key).to_owned(),
            reason: reason.into(),
        }
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).parse().map_err(|e: T::Err| self.invalid(key, e.to_string()))
    }

    /// A number, also accepting a ratio such as `1/252`.
    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key);
        let parsed = match v.split_once('/') {
            Some((a, b)) => a.trim().parse::<f64>().ok().zip(b.trim().parse::<f64>().ok()).map(|(a, b)| a / b),
            None => v.parse().ok(),
        };
        match parsed {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(self.invalid(key, "not a finite number")),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parsed(key)
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.usize(key).map(Some)
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.invalid(key, "expected true or false")),
        }
    }

    pub fn opt_string(&self, key: &str) -> Option<String> {
        Some(self.raw(key).to_owned()).filter(|s| !s.is_empty())
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.opt_string(key)
            .map(PathBuf::from)
            .ok_or_else(|| self.invalid(key, "a path is required"))
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.opt_string(key).map(PathBuf::from)
    }

    /// Comma-separated list.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect()
    }

    /// The resolved configuration in config-file syntax, plus derived values
    /// as comments.
    pub fn manifest(&self, derived: &[(&str, String)]) -> String {
        let mut out = format!(
            "# bubbletree {} {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (k, v) in derived {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }
}
