//! Lookup tables shipped as data files under `data/tables/`.
//!
//! Format: `#` comments, a `# version: N` line, then one
//! `canonical: variant, variant, ...` entry per line.

use std::collections::HashMap;

use thiserror::Error;

const NICKNAMES: &str = include_str!("../../data/tables/nicknames.txt");
const COMPANY_SUFFIXES: &str = include_str!("../../data/tables/company_suffixes.txt");
const STREET_SUFFIXES: &str = include_str!("../../data/tables/street_suffixes.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("table line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

/// A variant → canonical mapping with a pinned version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonTable {
    pub version: u32,
    map: HashMap<String, String>,
}

impl CanonTable {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut version = None;
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = Some(v.trim().parse().map_err(|_| TableError {
                        line: idx + 1,
                        message: format!("bad version {:?}", v.trim()),
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (canon, variants) = line.split_once(':').ok_or_else(|| TableError {
                line: idx + 1,
                message: "expected `canonical: variants`".into(),
            })?;
            let canon = canon.trim().to_lowercase();
            map.entry(canon.clone()).or_insert_with(|| canon.clone());
            for v in variants.split(',').map(|v| v.trim().to_lowercase()) {
                if !v.is_empty() {
                    map.entry(v).or_insert_with(|| canon.clone());
                }
            }
        }
        Ok(Self {
            version: version.ok_or(TableError {
                line: 0,
                message: "missing `# version:` line".into(),
            })?,
            map,
        })
    }

    pub fn canonical<'a>(&'a self, token: &'a str) -> &'a str {
        self.map.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.map.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    pub nicknames: CanonTable,
    pub company_suffixes: CanonTable,
    pub street_suffixes: CanonTable,
}

impl Tables {
    /// The tables compiled into the crate.
    pub fn builtin() -> Self {
        Self {
            nicknames: CanonTable::parse(NICKNAMES).expect("shipped nickname table"),
            company_suffixes: CanonTable::parse(COMPANY_SUFFIXES).expect("shipped company table"),
            street_suffixes: CanonTable::parse(STREET_SUFFIXES).expect("shipped street table"),
        }
    }
}
