//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the long
//! flag names without dashes (`alpha`, `replicates`, `out-dir`, ...).
//! A flag given on the command line always wins over the file.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key = value", n + 1))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                bail!("config line {}: empty key", n + 1);
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// The flag value if given, else the file value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| anyhow!("config key `{key}`: {e}")),
        }
    }

    /// Like [`pick`](Self::pick) with a fallback default.
    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let c = ConfigFile::parse("# sweep\nalpha = 0.1\nreplicates=200\nout_dir = runs\n").unwrap();
        assert_eq!(c.or(None, "alpha", 0.05).unwrap(), 0.1);
        assert_eq!(c.or(Some(0.01), "alpha", 0.05).unwrap(), 0.01);
        assert_eq!(c.or(None, "seed", 7u64).unwrap(), 7);
        assert_eq!(c.pick::<String>(None, "out-dir").unwrap().as_deref(), Some("runs"));
        assert!(c.pick::<usize>(None, "alpha").is_err());
        assert!(ConfigFile::parse("novalue").is_err());
    }
}
