//! The supplementary database: one linguistic variable per fuzzified
//! column, optionally with materialized per-row degrees.

use serde::{Deserialize, Serialize};

use super::QueryError;
use crate::fuzzy::LinguisticVariable;
use crate::store::{normalize_column, parse_number, ColumnKind, SubscriberStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDegrees {
    pub term: String,
    /// `None` for rows whose cell is empty.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Materialized {
    /// FNV-1a digest of the column cells the degrees were computed from.
    pub digest: String,
    pub rows: usize,
    pub degrees: Vec<TermDegrees>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub table: String,
    pub column: String,
    pub variable: LinguisticVariable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub materialized: Option<Materialized>,
}

impl CatalogEntry {
    fn matches(&self, table: &str, column: &str) -> bool {
        self.table.eq_ignore_ascii_case(table)
            && normalize_column(&self.column) == normalize_column(column)
    }

    /// Cached degrees for `term`, if present and computed from exactly
    /// the store's current column contents.
    pub fn cached(&self, store: &SubscriberStore, col: usize, term: &str) -> Option<&[Option<f64>]> {
        let m = self.materialized.as_ref()?;
        if m.rows != store.len() || m.digest != column_digest(store, col) {
            return None;
        }
        m.degrees
            .iter()
            .find(|t| t.term == term)
            .map(|t| t.values.as_slice())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FuzzificationCatalog {
    pub entries: Vec<CatalogEntry>,
}

/// Degree of `term` for one cell; empty or non-numeric cells have none.
pub fn cell_degree(var: &LinguisticVariable, term: &str, cell: &str) -> Option<f64> {
    let x = parse_number(cell)?;
    let (x, _) = var.universe().clamp(x);
    Some(var.term(term)?.mf.membership(x).value())
}

pub fn column_digest(store: &SubscriberStore, col: usize) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for row in store.rows() {
        for b in row[col].bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn materialize(store: &SubscriberStore, col: usize, var: &LinguisticVariable) -> Materialized {
    Materialized {
        digest: column_digest(store, col),
        rows: store.len(),
        degrees: var
            .terms()
            .iter()
            .map(|t| TermDegrees {
                term: t.label.clone(),
                values: store
                    .rows()
                    .iter()
                    .map(|r| cell_degree(var, &t.label, &r[col]))
                    .collect(),
            })
            .collect(),
    }
}

impl FuzzificationCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, table: &str, column: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.matches(table, column))
    }

    /// Binds `var` to a numeric column of `store`, replacing any previous
    /// entry (and its materialized degrees).
    pub fn fuzzify_column(
        &mut self,
        store: &SubscriberStore,
        column: &str,
        var: LinguisticVariable,
        materialize_degrees: bool,
    ) -> Result<&CatalogEntry, QueryError> {
        let col = store
            .column_index(column)
            .ok_or_else(|| QueryError::UnknownColumn(column.to_string()))?;
        if store.column_kind(col) == ColumnKind::Text {
            return Err(QueryError::NonNumericColumn(store.columns()[col].clone()));
        }
        let entry = CatalogEntry {
            table: store.table().to_string(),
            column: store.columns()[col].clone(),
            materialized: materialize_degrees.then(|| materialize(store, col, &var)),
            variable: var,
        };
        let idx = match self
            .entries
            .iter()
            .position(|e| e.matches(store.table(), column))
        {
            Some(i) => {
                self.entries[i] = entry;
                i
            }
            None => {
                self.entries.push(entry);
                self.entries.len() - 1
            }
        };
        Ok(&self.entries[idx])
    }

    /// Checks every materialized degree against recomputation. Returns the
    /// `(column, term, row)` triples that disagree.
    pub fn incoherent(&self, store: &SubscriberStore) -> Vec<(String, String, usize)> {
        let mut bad = Vec::new();
        for e in &self.entries {
            let (Some(m), Some(col)) = (&e.materialized, store.column_index(&e.column)) else {
                continue;
            };
            if !e.table.eq_ignore_ascii_case(store.table()) {
                continue;
            }
            for td in &m.degrees {
                for (row, cached) in td.values.iter().enumerate() {
                    let fresh = store
                        .rows()
                        .get(row)
                        .and_then(|r| cell_degree(&e.variable, &td.term, &r[col]));
                    if *cached != fresh {
                        bad.push((e.column.clone(), td.term.clone(), row));
                    }
                }
            }
            if m.rows != store.len() {
                bad.push((e.column.clone(), String::new(), m.rows.min(store.len())));
            }
        }
        bad
    }
}
