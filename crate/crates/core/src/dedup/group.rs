use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::SubscriberRecord;
use super::score::Matcher;
use super::text::soundex;
use super::DedupError;

/// Which record pairs receive full scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Blocking when it provably finds every pair above the threshold and
    /// the corpus is large enough to benefit; all pairs otherwise.
    Auto,
    BruteForce,
    /// Blocking even when the threshold does not guarantee soundness.
    Blocking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    /// Row ids, ascending.
    pub members: Vec<usize>,
    /// Smallest combined score over every member pair, linked or not.
    pub min_score: f64,
    pub primary: usize,
    /// Threshold-passing pairs that connect the group.
    pub edges: Vec<Edge>,
}

/// Blocking keys of a normalized record, or `None` when the record must be
/// compared against everything (no phone, or a first or last name token
/// without a Soundex code).
fn blocking_keys(r: &SubscriberRecord, m: &Matcher) -> Option<Vec<String>> {
    let tokens: Vec<&str> = r.name.split_whitespace().collect();
    let (first, last) = (tokens.first()?, tokens.last()?);
    if r.phone.is_empty() {
        return None;
    }
    let mut keys = vec![
        format!("n:{}", soundex(first)?),
        format!("n:{}", soundex(last)?),
        format!("p:{}", r.phone),
    ];
    if let Some(code) = soundex(m.tables.nicknames.canonical(first)) {
        keys.push(format!("n:{code}"));
    }
    keys.sort();
    keys.dedup();
    Some(keys)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root.
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl Matcher {
    /// Whether `Strategy::Auto` uses blocking for `n` records.
    ///
    /// A pair that shares no key has both its phonetic and its phone
    /// component present and zero, so its combined score cannot exceed
    /// [`Matcher::unblocked_ceiling`]. Above that threshold blocking loses
    /// nothing.
    pub fn blocking_is_sound(&self, threshold: f64) -> bool {
        threshold > self.unblocked_ceiling()
    }

    fn use_blocking(&self, n: usize, threshold: f64, strategy: Strategy) -> bool {
        match strategy {
            Strategy::BruteForce => false,
            Strategy::Blocking => true,
            Strategy::Auto => n >= self.brute_force_below && self.blocking_is_sound(threshold),
        }
    }

    /// Index pairs `(i, j)`, `i < j`, in ascending order.
    pub fn candidate_pairs(&self, normed: &[SubscriberRecord], blocking: bool) -> Vec<(usize, usize)> {
        let n = normed.len();
        if !blocking {
            return (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect();
        }
        let mut buckets: HashMap<String, Vec<usize>> = HashMap::new();
        let mut residual = Vec::new();
        for (i, r) in normed.iter().enumerate() {
            match blocking_keys(r, self) {
                Some(keys) => keys
                    .into_iter()
                    .for_each(|k| buckets.entry(k).or_default().push(i)),
                None => residual.push(i),
            }
        }
        let mut pairs = BTreeSet::new();
        for members in buckets.values() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
        for &i in &residual {
            for j in (0..n).filter(|&j| j != i) {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
        pairs.into_iter().collect()
    }

    pub fn find_duplicate_groups(
        &self,
        records: &[SubscriberRecord],
        threshold: f64,
    ) -> Result<Vec<DuplicateGroup>, DedupError> {
        self.find_duplicate_groups_with(records, threshold, Strategy::Auto)
    }

    pub fn find_duplicate_groups_with(
        &self,
        records: &[SubscriberRecord],
        threshold: f64,
        strategy: Strategy,
    ) -> Result<Vec<DuplicateGroup>, DedupError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(DedupError::BadThreshold(threshold));
        }
        self.weights.validate()?;
        let mut seen = BTreeSet::new();
        for r in records {
            if !seen.insert(r.row_id) {
                return Err(DedupError::DuplicateRowId(r.row_id));
            }
        }

        let normed: Vec<SubscriberRecord> = records.iter().map(|r| self.normalize(r)).collect();
        let pairs = self.candidate_pairs(&normed, self.use_blocking(normed.len(), threshold, strategy));
        // Order-preserving parallel map; the reduction below is sequential.
        let scored: Vec<Option<f64>> = pairs
            .par_iter()
            .map(|&(i, j)| self.similarity(&normed[i], &normed[j]).ok().map(|s| s.combined))
            .collect();

        let mut uf = UnionFind((0..normed.len()).collect());
        let mut edges = Vec::new();
        for (&(i, j), score) in pairs.iter().zip(&scored) {
            if let Some(s) = *score {
                if s >= threshold {
                    uf.union(i, j);
                    edges.push((i, j, s));
                }
            }
        }

        let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..normed.len() {
            let root = uf.find(i);
            components.entry(root).or_default().push(i);
        }
        let mut groups: Vec<DuplicateGroup> = components
            .into_values()
            .filter(|c| c.len() >= 2)
            .map(|idx| {
                let mut min_score = f64::INFINITY;
                for (x, &i) in idx.iter().enumerate() {
                    for &j in &idx[x + 1..] {
                        let s = self
                            .similarity(&normed[i], &normed[j])
                            .map_or(0.0, |s| s.combined);
                        min_score = min_score.min(s);
                    }
                }
                let root = uf.find(idx[0]);
                let mut group_edges: Vec<Edge> = edges
                    .iter()
                    .filter(|(i, _, _)| uf.find(*i) == root)
                    .map(|&(i, j, score)| {
                        let (a, b) = (records[i].row_id, records[j].row_id);
                        Edge {
                            a: a.min(b),
                            b: a.max(b),
                            score,
                        }
                    })
                    .collect();
                group_edges.sort_by_key(|e| (e.a, e.b));
                let mut members: Vec<usize> = idx.iter().map(|&i| records[i].row_id).collect();
                members.sort_unstable();
                DuplicateGroup {
                    primary: members[0],
                    members,
                    min_score,
                    edges: group_edges,
                }
            })
            .collect();
        groups.sort_by_key(|g| g.members[0]);
        Ok(groups)
    }
}
