//! Line-oriented `key=value` files (dataset metadata, manifests, plans,
//! reports). Blank lines and `#` comments are ignored on read.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KvFile {
    entries: Vec<(String, String)>,
}

impl KvFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Last value recorded for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::format(
                    origin,
                    format!("line {}: expected key=value, got {line:?}", lineno + 1),
                ));
            };
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    /// Parses the value for `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str, origin: &Path) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::format(origin, format!("cannot parse {key}={v}"))),
        }
    }

    /// Parses a comma-separated list for `key` if present.
    pub fn parsed_list<T: FromStr>(&self, key: &str, origin: &Path) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| Error::format(origin, format!("cannot parse list {key}={v}"))),
        }
    }
}
