//! Fuzzy SQL over the subscriber-profile store.
//!
//! Crisp comparisons evaluate to 0 or 1, `column IS term` to the term's
//! membership degree, and `AND`/`OR`/`NOT` to min/max/complement. Fuzzy
//! predicates need a catalog entry for their column; see
//! [`FuzzificationCatalog::fuzzify_column`].

mod ast;
mod catalog;
mod exec;
mod parser;

use thiserror::Error;

pub use ast::{CmpOp, Expr, Literal, Projection, Query};
pub use catalog::{
    cell_degree, column_digest, CatalogEntry, FuzzificationCatalog, Materialized, TermDegrees,
};
pub use exec::{
    compare_cell, execute, explain, Binding, Plan, PlanNode, QueryResult, RankedRow,
    DEFAULT_ALPHA,
};
pub use parser::{parse_query, QueryParseError};

/// Semantic errors: the query parsed but cannot run against this store.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {0:?} is not numeric and cannot be fuzzified")]
    NonNumericColumn(String),
    #[error("column {0:?} has no fuzzification catalog entry")]
    NotFuzzified(String),
    #[error("unknown term {term:?} for column {column:?}; available terms: {}", available.join(", "))]
    UnknownTerm {
        column: String,
        term: String,
        available: Vec<String>,
    },
    #[error("alpha {0} outside [0, 1]")]
    BadAlpha(f64),
}
