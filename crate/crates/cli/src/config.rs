//! Plain-text `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the long
//! flag names with `-` or `_` interchangeable, e.g. `tau-over-t = 0.7`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub const KNOWN_KEYS: &[&str] = &[
    "protocol",
    "g",
    "d",
    "rwa",
    "gt",
    "tau_over_t",
    "window",
    "detuning1",
    "detuning2",
    "rtol",
    "atol",
    "g_grid",
    "g_range",
    "d_list",
    "output",
    "serial",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        text.parse()
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get_raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| format!("config key '{key}': cannot parse '{v}': {e}"))
            })
            .transpose()
    }
}

impl FromStr for FileConfig {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key '{key}'", lineno + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }
}

/// Comma-separated list, e.g. `2,3,4`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}

/// `start:stop:step`
pub fn parse_range(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("range '{s}': expected start:stop:step"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("range '{s}': {e}"));
    let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(format!("range '{s}': need step > 0 and stop >= start"));
    }
    Ok((start, stop, step))
}
