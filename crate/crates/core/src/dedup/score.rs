use serde::{Deserialize, Serialize};

use super::record::{normalize, SubscriberRecord};
use super::tables::Tables;
use super::text::{edit_similarity, soundex};
use super::DedupError;

/// Per-component weights of the combined score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub name_edit: f64,
    pub name_phonetic: f64,
    pub nickname: f64,
    pub email_local: f64,
    pub phone: f64,
    pub company: f64,
    pub street: f64,
    pub location: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            name_edit: 1.0,
            name_phonetic: 1.0,
            nickname: 1.0,
            email_local: 1.0,
            phone: 1.0,
            company: 1.0,
            street: 1.0,
            location: 1.0,
        }
    }
}

impl Weights {
    fn as_array(&self) -> [f64; 8] {
        [
            self.name_edit,
            self.name_phonetic,
            self.nickname,
            self.email_local,
            self.phone,
            self.company,
            self.street,
            self.location,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn validate(&self) -> Result<(), DedupError> {
        let w = self.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || self.total() <= 0.0 {
            return Err(DedupError::BadWeights);
        }
        Ok(())
    }
}

/// Component scores; `None` where either record lacks the field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub name_edit: Option<f64>,
    pub name_phonetic: Option<f64>,
    pub nickname: Option<f64>,
    pub email_local: Option<f64>,
    pub phone: Option<f64>,
    pub company: Option<f64>,
    pub street: Option<f64>,
    pub location: Option<f64>,
}

impl Components {
    fn as_array(&self) -> [Option<f64>; 8] {
        [
            self.name_edit,
            self.name_phonetic,
            self.nickname,
            self.email_local,
            self.phone,
            self.company,
            self.street,
            self.location,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub components: Components,
    pub combined: f64,
}

fn present(a: &str, b: &str) -> bool {
    !a.is_empty() && !b.is_empty()
}

fn exact(a: &str, b: &str) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn swap_ends<'a>(t: &[&'a str]) -> Vec<&'a str> {
    let mut out = t.to_vec();
    let last = out.len() - 1;
    out.swap(0, last);
    out
}

type NamePair<'a> = (Vec<&'a str>, Vec<&'a str>);

/// Name token sequences to compare: as written, with either side's first
/// and last tokens swapped, and with both first names replaced by their
/// nickname canonical form.
fn name_variants<'a>(a: &[&'a str], b: &[&'a str], tables: &'a Tables) -> Vec<NamePair<'a>> {
    let mut out = vec![(a.to_vec(), b.to_vec())];
    if a.len() >= 2 || b.len() >= 2 {
        out.push((swap_ends(a), b.to_vec()));
        out.push((a.to_vec(), swap_ends(b)));
    }
    let (mut ca, mut cb) = (a.to_vec(), b.to_vec());
    ca[0] = tables.nicknames.canonical(a[0]);
    cb[0] = tables.nicknames.canonical(b[0]);
    out.push((ca, cb));
    out
}

/// Share of aligned (first, last) tokens with equal Soundex codes.
fn phonetic_agreement(a: &[&str], b: &[&str]) -> Option<f64> {
    let code = |t: &str| soundex(t);
    let pairs: Vec<(&str, &str)> = if a.len() == 1 || b.len() == 1 {
        vec![(a[0], b[0])]
    } else {
        vec![(a[0], b[0]), (a[a.len() - 1], b[b.len() - 1])]
    };
    let codes: Vec<(Option<String>, Option<String>)> =
        pairs.iter().map(|(x, y)| (code(x), code(y))).collect();
    if codes.iter().all(|(x, y)| x.is_none() || y.is_none()) {
        return None;
    }
    let hits = codes
        .iter()
        .filter(|(x, y)| x.is_some() && x == y)
        .count();
    Some(hits as f64 / codes.len() as f64)
}

fn local_part(email: &str) -> String {
    email
        .split('@')
        .next()
        .unwrap_or_default()
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Fraction of `name`'s tokens (two characters or longer) found in `local`.
fn containment(name: &[&str], local: &str) -> Option<f64> {
    let tokens: Vec<&&str> = name.iter().filter(|t| t.chars().count() >= 2).collect();
    if tokens.is_empty() || local.is_empty() {
        return None;
    }
    Some(tokens.iter().filter(|t| local.contains(**t)).count() as f64 / tokens.len() as f64)
}

/// Scores pairs of normalized records.
#[derive(Debug, Clone, PartialEq)]
pub struct Matcher {
    pub tables: Tables,
    pub weights: Weights,
    /// Below this many records every pair is scored.
    pub brute_force_below: usize,
}

pub const DEFAULT_THRESHOLD: f64 = 0.85;
pub const DEFAULT_BRUTE_FORCE_BELOW: usize = 50;

impl Default for Matcher {
    fn default() -> Self {
        Self {
            tables: Tables::builtin(),
            weights: Weights::default(),
            brute_force_below: DEFAULT_BRUTE_FORCE_BELOW,
        }
    }
}

impl Matcher {
    pub fn normalize(&self, r: &SubscriberRecord) -> SubscriberRecord {
        normalize(r, &self.tables)
    }

    /// Compares two normalized records.
    pub fn similarity(
        &self,
        a: &SubscriberRecord,
        b: &SubscriberRecord,
    ) -> Result<SimilarityScore, DedupError> {
        let ta: Vec<&str> = a.name.split_whitespace().collect();
        let tb: Vec<&str> = b.name.split_whitespace().collect();
        let mut c = Components::default();

        if !ta.is_empty() && !tb.is_empty() {
            let variants = name_variants(&ta, &tb, &self.tables);
            c.name_edit = variants
                .iter()
                .map(|(x, y)| edit_similarity(&x.join(" "), &y.join(" ")))
                .reduce(f64::max);
            c.name_phonetic = variants
                .iter()
                .filter_map(|(x, y)| phonetic_agreement(x, y))
                .reduce(f64::max);
            let nick = &self.tables.nicknames;
            if ta[0] != tb[0] && nick.canonical(ta[0]) == nick.canonical(tb[0]) {
                c.nickname = Some(1.0);
            }
        }
        if present(&a.email, &b.email) {
            let (la, lb) = (local_part(&a.email), local_part(&b.email));
            c.email_local = Some(if !la.is_empty() && la == lb {
                1.0
            } else {
                // Name tokens of each side looked up in the other's local part.
                let dirs = [containment(&ta, &lb), containment(&tb, &la)];
                dirs.iter().map(|d| d.unwrap_or(0.0)).sum::<f64>() / 2.0
            });
        }
        if present(&a.phone, &b.phone) {
            c.phone = Some(exact(&a.phone, &b.phone));
        }
        if present(&a.company, &b.company) {
            c.company = Some(edit_similarity(&a.company, &b.company));
        }
        if present(&a.street, &b.street) {
            c.street = Some(edit_similarity(&a.street, &b.street));
        }
        if present(&a.la, &b.la) {
            c.location = Some(exact(&a.la, &b.la));
        }

        let (mut num, mut den) = (0.0, 0.0);
        for (s, w) in c.as_array().into_iter().zip(self.weights.as_array()) {
            if let Some(s) = s {
                num += w * s;
                den += w;
            }
        }
        if c.as_array().iter().all(Option::is_none) {
            return Err(DedupError::NoComparableFields);
        }
        let combined = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
        Ok(SimilarityScore {
            components: c,
            combined,
        })
    }

    /// Normalizes both records, then scores them.
    pub fn compare(
        &self,
        a: &SubscriberRecord,
        b: &SubscriberRecord,
    ) -> Result<SimilarityScore, DedupError> {
        self.similarity(&self.normalize(a), &self.normalize(b))
    }

    /// Largest combined score a pair can reach when both its phonetic and
    /// phone components are present and zero.
    pub fn unblocked_ceiling(&self) -> f64 {
        let w = &self.weights;
        1.0 - (w.name_phonetic + w.phone) / w.total()
    }
}
