//! Fuzzy duplicate detection and merging of subscriber records.
//!
//! Records are normalized, compared pairwise on several signals (name edit
//! distance, Soundex, nicknames, email, phone, company, street, location
//! area), linked when the combined score reaches a threshold and grouped
//! into connected components. Groups merge into their lowest row id with a
//! full change history.

mod group;
mod merge;
mod record;
mod score;
mod tables;
mod text;

use thiserror::Error;

pub use group::{DuplicateGroup, Edge, Strategy};
pub use merge::{apply_merges, merge_group, Change, ChangeKind, FieldSource, MergeResult};
pub use record::{
    normalize, normalize_phone, normalize_text, records_from_store, ColumnBinding, RecordSchema,
    Role, SubscriberRecord,
};
pub use score::{
    Components, Matcher, SimilarityScore, Weights, DEFAULT_BRUTE_FORCE_BELOW, DEFAULT_THRESHOLD,
};
pub use tables::{CanonTable, TableError, Tables};
pub use text::{edit_similarity, levenshtein, soundex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DedupError {
    #[error("no comparable fields")]
    NoComparableFields,
    #[error("threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("weights must be finite, non-negative and not all zero")]
    BadWeights,
    #[error("row id {0} appears more than once")]
    DuplicateRowId(usize),
    #[error("group refers to unknown row {0}")]
    UnknownRow(usize),
    #[error("a group needs at least two distinct records")]
    GroupTooSmall,
}

/// Groups with the default matcher.
pub fn find_duplicate_groups(
    records: &[SubscriberRecord],
    threshold: f64,
) -> Result<Vec<DuplicateGroup>, DedupError> {
    Matcher::default().find_duplicate_groups(records, threshold)
}
