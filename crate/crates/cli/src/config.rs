//! Plain-text `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Every key a command reads is recorded with its effective value
//! (file value or default); the sorted record plus the seed is what the
//! config hash covers, so two runs with the same effective settings share a
//! hash. Keys present in the file but never read are rejected.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{usage, CliResult};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

/// Effective settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: String,
    pub seed: u64,
    pub entries: BTreeMap<String, String>,
    pub hash: String,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T>
where
    T::Err: Display,
{
    raw.parse::<T>().map_err(|e| usage(format!("config key `{key}`: cannot parse `{raw}`: {e}")))
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(usage(format!("config line {}: empty key", i + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(usage(format!("config line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Config { values, resolved: RefCell::new(BTreeMap::new()) })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                Config::parse(&text)
            }
        }
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        let v = match self.values.get(key) {
            Some(raw) => parse_value(key, raw)?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        let v = self.get(key, default)?;
        if !v.is_finite() {
            return Err(usage(format!("config key `{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn list_f64(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        let v: Vec<f64> = match self.values.get(key) {
            Some(raw) => raw.split(',').map(|s| parse_value::<f64>(key, s.trim())).collect::<CliResult<_>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(usage(format!("config key `{key}` needs a nonempty list of finite numbers")));
        }
        self.record(key, v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    pub fn list_str(&self, key: &str, default: &[&str]) -> CliResult<Vec<String>> {
        let v: Vec<String> = match self.values.get(key) {
            Some(raw) => raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        if v.is_empty() {
            return Err(usage(format!("config key `{key}` needs at least one entry")));
        }
        self.record(key, v.join(","));
        Ok(v)
    }

    /// One of `allowed`; the first entry is the default.
    pub fn choice(&self, key: &str, allowed: &[&str]) -> CliResult<String> {
        let v = self.values.get(key).map(String::as_str).unwrap_or(allowed[0]);
        if !allowed.contains(&v) {
            return Err(usage(format!("config key `{key}`: `{v}` is not one of {}", allowed.join(", "))));
        }
        self.record(key, v.to_string());
        Ok(v.to_string())
    }

    /// Seed from the command line, else the `seed` key, else `default`.
    pub fn seed(&self, flag: Option<u64>, default: u64) -> CliResult<u64> {
        let seed = match flag {
            Some(s) => s,
            None => match self.values.get("seed") {
                Some(raw) => parse_value("seed", raw)?,
                None => default,
            },
        };
        // the seed is hashed separately, never as a config entry
        self.resolved.borrow_mut().remove("seed");
        Ok(seed)
    }

    /// Rejects unread keys and fixes the config hash.
    pub fn finish(&self, command: &str, seed: u64) -> CliResult<Resolved> {
        let entries = self.resolved.borrow().clone();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| k.as_str() != "seed" && !entries.contains_key(*k))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            return Err(usage(format!("unknown config key(s) for `{command}`: {}", unknown.join(", "))));
        }
        let mut h = Sha256::new();
        h.update(format!("command={command}\n"));
        for (k, v) in &entries {
            h.update(format!("{k}={v}\n"));
        }
        h.update(format!("seed={seed}\n"));
        let hash: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
        Ok(Resolved { command: command.to_string(), seed, entries, hash })
    }
}
