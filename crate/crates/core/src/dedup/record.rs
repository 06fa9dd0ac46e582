use serde::{Deserialize, Serialize};

use super::tables::Tables;
use crate::store::{normalize_column, SubscriberStore};

/// The record fields the matcher understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Name,
    Email,
    Phone,
    Company,
    Street,
    La,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Name,
        Role::Email,
        Role::Phone,
        Role::Company,
        Role::Street,
        Role::La,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Name => "name",
            Role::Email => "email",
            Role::Phone => "phone",
            Role::Company => "company",
            Role::Street => "street",
            Role::La => "la",
        }
    }

    /// Store column names accepted for this role, in preference order.
    fn column_names(self) -> &'static [&'static str] {
        match self {
            Role::Name => &["subscriber_name", "name"],
            Role::Email => &["email", "email_id"],
            Role::Phone => &["phone", "mobile"],
            Role::Company => &["company"],
            Role::Street => &["street", "address"],
            Role::La => &["la"],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriberRecord {
    pub row_id: usize,
    pub name: String,
    pub email: String,
    pub phone: String,
    pub company: String,
    pub street: String,
    pub la: String,
    /// Store columns with no matching role, kept verbatim.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<(String, String)>,
}

impl SubscriberRecord {
    pub fn new(row_id: usize) -> Self {
        Self {
            row_id,
            ..Self::default()
        }
    }

    pub fn get(&self, role: Role) -> &str {
        match role {
            Role::Name => &self.name,
            Role::Email => &self.email,
            Role::Phone => &self.phone,
            Role::Company => &self.company,
            Role::Street => &self.street,
            Role::La => &self.la,
        }
    }

    pub fn get_mut(&mut self, role: Role) -> &mut String {
        match role {
            Role::Name => &mut self.name,
            Role::Email => &mut self.email,
            Role::Phone => &mut self.phone,
            Role::Company => &mut self.company,
            Role::Street => &mut self.street,
            Role::La => &mut self.la,
        }
    }

    pub fn with(mut self, role: Role, value: &str) -> Self {
        *self.get_mut(role) = value.to_string();
        self
    }

    /// Field name and value pairs: roles first, then extra columns.
    pub fn fields(&self) -> Vec<(String, &str)> {
        Role::ALL
            .iter()
            .map(|&r| (r.as_str().to_string(), self.get(r)))
            .chain(self.extra.iter().map(|(k, v)| (k.clone(), v.as_str())))
            .collect()
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        Role::ALL
            .iter()
            .find(|r| r.as_str() == name)
            .map(|&r| self.get(r))
            .or_else(|| {
                self.extra
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v.as_str())
            })
    }

    pub fn set_field(&mut self, name: &str, value: String) {
        if let Some(&r) = Role::ALL.iter().find(|r| r.as_str() == name) {
            *self.get_mut(r) = value;
        } else if let Some(slot) = self.extra.iter_mut().find(|(k, _)| k == name) {
            slot.1 = value;
        } else {
            self.extra.push((name.to_string(), value));
        }
    }

    pub fn is_blank(&self) -> bool {
        self.fields().iter().all(|(_, v)| v.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnBinding {
    Role(Role),
    Extra,
}

/// How store columns map onto record fields, so records can be written
/// back in the original column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSchema {
    pub columns: Vec<(String, ColumnBinding)>,
}

impl RecordSchema {
    pub fn for_columns(columns: &[String]) -> Self {
        let norm: Vec<String> = columns.iter().map(|c| normalize_column(c)).collect();
        let mut bound = vec![ColumnBinding::Extra; columns.len()];
        for role in Role::ALL {
            if let Some(i) = role
                .column_names()
                .iter()
                .find_map(|name| norm.iter().position(|c| c == name))
            {
                bound[i] = ColumnBinding::Role(role);
            }
        }
        Self {
            columns: columns.iter().cloned().zip(bound).collect(),
        }
    }

    pub fn records(&self, store: &SubscriberStore) -> Vec<SubscriberRecord> {
        store
            .rows()
            .iter()
            .enumerate()
            .map(|(row_id, row)| {
                let mut r = SubscriberRecord::new(row_id);
                for ((col, binding), cell) in self.columns.iter().zip(row) {
                    match binding {
                        ColumnBinding::Role(role) => *r.get_mut(*role) = cell.clone(),
                        ColumnBinding::Extra => r.extra.push((col.clone(), cell.clone())),
                    }
                }
                r
            })
            .collect()
    }

    pub fn row(&self, r: &SubscriberRecord) -> Vec<String> {
        self.columns
            .iter()
            .map(|(col, binding)| match binding {
                ColumnBinding::Role(role) => r.get(*role).to_string(),
                ColumnBinding::Extra => r.field(col).unwrap_or_default().to_string(),
            })
            .collect()
    }
}

/// Reads every row of `store` as a record; row ids are 0-based row indices.
pub fn records_from_store(store: &SubscriberStore) -> (RecordSchema, Vec<SubscriberRecord>) {
    let schema = RecordSchema::for_columns(store.columns());
    let records = schema.records(store);
    (schema, records)
}

/// Lowercase, drop `'`, `.` and `,`, turn other non-alphanumerics into
/// spaces, collapse whitespace.
pub fn normalize_text(s: &str) -> String {
    let mapped: String = s
        .chars()
        .filter(|c| !matches!(c, '\'' | '.' | ','))
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Digits only; an 11-digit number with country code 1 loses it.
pub fn normalize_phone(s: &str) -> String {
    let digits: String = s.chars().filter(char::is_ascii_digit).collect();
    if digits.len() == 11 && digits.starts_with('1') {
        digits[1..].to_string()
    } else {
        digits
    }
}

fn canonical_last_token(text: String, table: &super::tables::CanonTable) -> String {
    let mut tokens: Vec<&str> = text.split(' ').collect();
    if let Some(last) = tokens.last_mut() {
        *last = table.canonical(last);
    }
    tokens.join(" ")
}

/// Normalized copy of `r` for matching. Extra columns are left alone.
pub fn normalize(r: &SubscriberRecord, tables: &Tables) -> SubscriberRecord {
    SubscriberRecord {
        row_id: r.row_id,
        name: normalize_text(&r.name),
        email: r.email.trim().to_lowercase(),
        phone: normalize_phone(&r.phone),
        company: canonical_last_token(normalize_text(&r.company), &tables.company_suffixes),
        street: canonical_last_token(normalize_text(&r.street), &tables.street_suffixes),
        la: normalize_text(&r.la),
        extra: r.extra.clone(),
    }
}
