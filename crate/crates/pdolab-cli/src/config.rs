//! Flat `key = value` experiment configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(pdolab::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<pdolab::Error> for CliError {
    fn from(e: pdolab::Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut c = Config::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key = value, got {raw:?}", no + 1));
            };
            c.set(k.trim(), v.trim());
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.map.insert(key.to_string(), value.into());
    }

    /// Apply a `KEY=VALUE` override.
    pub fn apply_override(&mut self, kv: &str) -> CliResult<()> {
        match kv.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.set(k.trim(), v.trim());
                Ok(())
            }
            _ => usage(format!("override {kv:?} is not KEY=VALUE")),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key).ok_or_else(|| CliError::Usage(format!("missing required setting '{key}'")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("{key} = {v:?} is not a non-negative integer"))),
        }
    }

    pub fn opt_usize(&self, key: &str) -> CliResult<Option<usize>> {
        self.get(key).map(|v| v.parse().map_err(|_| CliError::Usage(format!("{key} = {v:?} is not a non-negative integer")))).transpose()
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("{key} = {v:?} is not a non-negative integer"))),
        }
    }

    /// Comma-separated integers.
    pub fn list_i64_or(&self, key: &str, default: &[i64]) -> CliResult<Vec<i64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| s.trim().parse::<i64>().map_err(|_| CliError::Usage(format!("{key}: {s:?} is not an integer")))).collect(),
        }
    }

    pub fn list_u32_or(&self, key: &str, default: &[u32]) -> CliResult<Vec<u32>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| s.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("{key}: {s:?} is not a non-negative integer")))).collect(),
        }
    }
}

pub fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let t = v.trim();
    let x = match t {
        "pi" => std::f64::consts::PI,
        "2pi" => 2.0 * std::f64::consts::PI,
        _ => t.parse::<f64>().map_err(|_| CliError::Usage(format!("{key} = {v:?} is not a number")))?,
    };
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = Config::parse("# grid\nN = 64\nL=2pi  # period\n\nsymbol = builtin:bracket:1\n").unwrap();
        assert_eq!(c.usize_or("N", 8).unwrap(), 64);
        assert!((c.f64_or("L", 1.0).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        c.apply_override("N=128").unwrap();
        assert_eq!(c.usize_or("N", 8).unwrap(), 128);
        assert_eq!(c.get("symbol"), Some("builtin:bracket:1"));
        assert!(c.apply_override("oops").is_err());
        assert!(Config::parse("just words").is_err());
        assert!(c.f64_or("symbol", 0.0).is_err());
        assert_eq!(c.list_i64_or("sweep", &[1, 2]).unwrap(), vec![1, 2]);
        c.set("sweep", "8, 16,32");
        assert_eq!(c.list_i64_or("sweep", &[]).unwrap(), vec![8, 16, 32]);
    }
}
