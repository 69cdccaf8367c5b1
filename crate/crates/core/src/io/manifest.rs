//! Run manifests: one `key=value` per line, keys sorted, `#` comments ignored.
//! Values may not contain newlines.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Version of every file format written by this crate.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> Result<()> {
        let key = key.into();
        let value = value.to_string();
        if key.is_empty() || key.contains(['=', '\n', '#']) || key.trim() != key {
            return Err(Error::Format(format!("bad manifest key {key:?}")));
        }
        if value.contains('\n') {
            return Err(Error::Format(format!("manifest value for {key} spans lines")));
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse { line: k + 1, msg: "expected key=value".into() })?;
            if m.entries.contains_key(key) {
                return Err(Error::Parse { line: k + 1, msg: format!("duplicate key {key}") });
            }
            m.set(key, value).map_err(|e| Error::Parse { line: k + 1, msg: e.to_string() })?;
        }
        Ok(m)
    }
}
