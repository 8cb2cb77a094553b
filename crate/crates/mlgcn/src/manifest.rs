//! Ordered `key=value` text used by checkpoints and run manifests.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an earlier value in place.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: "expected key=value".into(),
            })?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io(path))?;
        Self::parse(path, &text)
    }

    /// Looks up and parses `key`, naming the file on failure.
    pub fn require<T: std::str::FromStr>(&self, path: &Path, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Invalid(format!("{}: missing key {key}", path.display())))?;
        raw.parse()
            .map_err(|_| Error::Invalid(format!("{}: bad value {raw:?} for {key}", path.display())))
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io(path))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Resolved configuration, input digests and artifact names of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    kv: KeyValues,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut kv = KeyValues::new();
        kv.set("command", command);
        Self { kv }
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.kv.set(key, value);
    }

    /// Records an input path together with its content digest.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.kv.set(&format!("input.{name}"), path.display());
        self.kv.set(&format!("sha256.{name}"), file_digest(path)?);
        Ok(())
    }

    pub fn artifacts(&mut self, names: &[String]) {
        self.kv.set("artifacts", names.join(","));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.kv.get(key)
    }

    pub fn render(&self) -> String {
        self.kv.render()
    }
}
