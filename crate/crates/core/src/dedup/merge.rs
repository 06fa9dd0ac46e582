use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::group::DuplicateGroup;
use super::record::SubscriberRecord;
use super::DedupError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    /// The primary's empty field took `new` from `source_row`.
    Adopted,
    /// `source_row` held `old`, which lost to the merged value `new`.
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub field: String,
    pub source_row: usize,
    pub old: String,
    pub new: String,
    pub kind: ChangeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSource {
    pub field: String,
    pub source_row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeResult {
    pub merged: SubscriberRecord,
    pub members: Vec<usize>,
    pub history: Vec<Change>,
    /// The record each nonempty merged field came from.
    pub provenance: Vec<FieldSource>,
}

/// Merges a group into its lowest row id. Each field keeps the primary's
/// value when nonempty, else the first nonempty value by ascending row id.
pub fn merge_group(
    g: &DuplicateGroup,
    records: &[SubscriberRecord],
) -> Result<MergeResult, DedupError> {
    let mut members: Vec<&SubscriberRecord> = g
        .members
        .iter()
        .map(|id| {
            records
                .iter()
                .find(|r| r.row_id == *id)
                .ok_or(DedupError::UnknownRow(*id))
        })
        .collect::<Result<_, _>>()?;
    members.sort_by_key(|r| r.row_id);
    members.dedup_by_key(|r| r.row_id);
    if members.len() < 2 {
        return Err(DedupError::GroupTooSmall);
    }

    let mut fields: Vec<String> = Vec::new();
    for r in &members {
        for (f, _) in r.fields() {
            if !fields.contains(&f) {
                fields.push(f);
            }
        }
    }

    let primary = members[0];
    let mut merged = primary.clone();
    let mut history = Vec::new();
    let mut provenance = Vec::new();
    for field in &fields {
        let value = |r: &SubscriberRecord| r.field(field).unwrap_or_default().to_string();
        let Some(winner) = members.iter().find(|r| !value(r).trim().is_empty()) else {
            merged.set_field(field, value(primary));
            continue;
        };
        let kept = value(winner);
        if winner.row_id != primary.row_id {
            history.push(Change {
                field: field.clone(),
                source_row: winner.row_id,
                old: value(primary),
                new: kept.clone(),
                kind: ChangeKind::Adopted,
            });
        }
        for loser in &members {
            let v = value(loser);
            if loser.row_id != winner.row_id && !v.trim().is_empty() && v != kept {
                history.push(Change {
                    field: field.clone(),
                    source_row: loser.row_id,
                    old: v,
                    new: kept.clone(),
                    kind: ChangeKind::Discarded,
                });
            }
        }
        provenance.push(FieldSource {
            field: field.clone(),
            source_row: winner.row_id,
        });
        merged.set_field(field, kept);
    }
    Ok(MergeResult {
        merged,
        members: members.iter().map(|r| r.row_id).collect(),
        history,
        provenance,
    })
}

/// The corpus after merging: every group collapses into its merged record,
/// other records pass through. Ordered by row id.
pub fn apply_merges(records: &[SubscriberRecord], merges: &[MergeResult]) -> Vec<SubscriberRecord> {
    let absorbed: BTreeSet<usize> = merges.iter().flat_map(|m| m.members.iter().copied()).collect();
    let mut out: Vec<SubscriberRecord> = records
        .iter()
        .filter(|r| !absorbed.contains(&r.row_id))
        .cloned()
        .chain(merges.iter().map(|m| m.merged.clone()))
        .collect();
    out.sort_by_key(|r| r.row_id);
    out
}
