//! Flat `key = value` configuration files merged under command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Values from a config file; keys are flag names without the leading dashes.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Blank lines and lines starting with `#` are ignored. Keys are
    /// normalized to lowercase with `_` replaced by `-`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("config line {}: expected key = value", no + 1)));
            };
            let key = k.trim().to_lowercase().replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Config(format!("config line {}: empty key", no + 1)));
            }
            values.insert(key, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&key.to_lowercase()).map(String::as_str)
    }

    /// The flag value when given, else the parsed config value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

/// Comma-separated list of values.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// Comma-separated list as a flag type.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_list(s)?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Self(v))
    }
}

/// `N,D,noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticArg {
    pub samples: usize,
    pub dims: usize,
    pub noise: f64,
}

impl FromStr for SyntheticArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err("expected N,D,noise".into());
        }
        Ok(Self {
            samples: parts[0].parse().map_err(|e| format!("N: {e}"))?,
            dims: parts[1].parse().map_err(|e| format!("D: {e}"))?,
            noise: parts[2].parse().map_err(|e| format!("noise: {e}"))?,
        })
    }
}

/// `auto` or `lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsArg {
    Auto,
    Fixed(f64, f64),
}

impl FromStr for BoundsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match parse_list::<f64>(s)?.as_slice() {
            &[lo, hi] if lo < hi => Ok(Self::Fixed(lo, hi)),
            _ => Err("expected `auto` or lo,hi with lo < hi".into()),
        }
    }
}
