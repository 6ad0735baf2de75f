//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique;
//! a repeated key is an error rather than a silent override.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValues {
    origin: String,
    base_dir: Option<PathBuf>,
    embedded: Vec<(&'static str, &'static str)>,
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: impl Into<String>) -> Result<Self> {
        let origin = origin.into();
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { path: origin, line: i + 1, reason: "expected `key = value`".into() });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config { path: origin, line: i + 1, reason: "empty key".into() });
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (i + 1, value.trim().to_string())) {
                return Err(Error::Config { path: origin, line: i + 1, reason: format!("key `{key}` already set on line {first}") });
            }
        }
        Ok(Self { origin, base_dir: None, embedded: Vec::new(), entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut kv = Self::parse(&text, path.display().to_string())?;
        kv.base_dir = path.parent().map(Path::to_path_buf);
        Ok(kv)
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    /// Resolve a path-valued setting relative to the file's directory.
    pub fn resolve(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Serve file references from memory instead of the filesystem.
    pub fn with_embedded(mut self, files: &[(&'static str, &'static str)]) -> Self {
        self.embedded = files.to_vec();
        self
    }

    /// Contents of a file referenced by a setting.
    pub fn read_file(&self, value: &str) -> Result<String> {
        if let Some((_, text)) = self.embedded.iter().find(|(name, _)| *name == value) {
            return Ok((*text).to_string());
        }
        let path = self.resolve(value);
        std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e: T::Err| Error::Config {
                path: self.origin.clone(),
                line: *line,
                reason: format!("`{key}`: cannot parse {v:?}: {e}"),
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| Error::Config { path: self.origin.clone(), line: 0, reason: format!("missing key `{key}`") })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Distinct `<prefix>.<name>.…` segments, sorted numerically when they parse as integers.
    pub fn groups(&self, prefix: &str) -> Vec<String> {
        let head = format!("{prefix}.");
        let mut names: Vec<String> = self.keys().filter_map(|k| k.strip_prefix(&head)).filter_map(|rest| rest.split('.').next()).map(str::to_string).collect();
        names.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            _ => a.cmp(b),
        });
        names.dedup();
        names
    }
}
