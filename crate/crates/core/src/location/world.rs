use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::network::{select_cell, CellId, Network, Position};
use super::SimError;

pub type Profile = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlrEntry {
    pub profile: Profile,
    /// Lac of the VLR currently holding the profile; `None` when detached.
    pub vlr: Option<u32>,
    pub transitions: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VlrState {
    pub cache: BTreeMap<String, Profile>,
}

/// Running totals. Every counter only grows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub ticks: u64,
    pub location_updates: u64,
    pub profile_transfers: u64,
    pub paging_requests: u64,
    pub cells_paged: u64,
    pub failed_pages: u64,
    pub dropped_signals: u64,
}

impl SimMetrics {
    pub fn cells_per_page(&self) -> f64 {
        if self.paging_requests == 0 {
            0.0
        } else {
            self.cells_paged as f64 / self.paging_requests as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Move { subscriber: String, x: f64, y: f64 },
    Call { subscriber: String },
}

impl Event {
    pub fn subscriber(&self) -> &str {
        match self {
            Event::Move { subscriber, .. } | Event::Call { subscriber } => subscriber,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Deregister { subscriber: String, lac: u32 },
    LocationUpdate { subscriber: String, from: Option<u32>, to: u32 },
    ProfileTransfer { subscriber: String, lac: u32 },
    DroppedSignal { subscriber: String, rx_dbm: f64 },
    Page { subscriber: String, lac: u32, cells: usize },
    PageFailed { subscriber: String },
}

/// What one event did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub serving: Option<CellId>,
    pub rx_dbm: f64,
    pub lac_changed: bool,
    pub dropped: bool,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    network: Network,
    hlr: BTreeMap<String, HlrEntry>,
    vlrs: BTreeMap<u32, VlrState>,
    positions: BTreeMap<String, Position>,
    metrics: SimMetrics,
}

impl World {
    /// Places each subscriber and attaches it where the signal allows.
    /// Initial attachment is not counted as a location update.
    pub fn new(
        network: Network,
        subscribers: impl IntoIterator<Item = (String, Position, Profile)>,
    ) -> Result<Self, SimError> {
        let vlrs = network.lacs().map(|l| (l, VlrState::default())).collect();
        let mut w = Self {
            network,
            hlr: BTreeMap::new(),
            vlrs,
            positions: BTreeMap::new(),
            metrics: SimMetrics::default(),
        };
        for (id, pos, profile) in subscribers {
            if !pos.is_finite() {
                return Err(SimError::BadSubscriberPosition(id));
            }
            if w.hlr.contains_key(&id) {
                return Err(SimError::DuplicateSubscriber(id));
            }
            let (cell, rx) = select_cell(pos, &w.network);
            let vlr = (rx >= w.network.drop_threshold_dbm()).then_some(cell.lac);
            if let Some(lac) = vlr {
                w.vlrs
                    .get_mut(&lac)
                    .expect("every lac has a VLR")
                    .cache
                    .insert(id.clone(), profile.clone());
            }
            w.positions.insert(id.clone(), pos);
            w.hlr.insert(
                id,
                HlrEntry {
                    profile,
                    vlr,
                    transitions: 0,
                },
            );
        }
        Ok(w)
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn hlr(&self) -> &BTreeMap<String, HlrEntry> {
        &self.hlr
    }

    pub fn vlrs(&self) -> &BTreeMap<u32, VlrState> {
        &self.vlrs
    }

    pub fn position(&self, subscriber: &str) -> Option<Position> {
        self.positions.get(subscriber).copied()
    }

    pub fn subscribers(&self) -> impl Iterator<Item = &str> {
        self.hlr.keys().map(String::as_str)
    }

    pub fn metrics(&self) -> SimMetrics {
        self.metrics
    }

    /// Applies one event. Unknown subscribers and non-finite positions are
    /// rejected before any state changes.
    pub fn step(&mut self, event: &Event) -> Result<StepOutcome, SimError> {
        let id = event.subscriber();
        if !self.hlr.contains_key(id) {
            return Err(SimError::UnknownSubscriber(id.to_string()));
        }
        if let Event::Move { x, y, .. } = event {
            if !Position::new(*x, *y).is_finite() {
                return Err(SimError::BadSubscriberPosition(id.to_string()));
            }
        }
        self.metrics.ticks += 1;
        match event {
            Event::Move { x, y, .. } => Ok(self.apply_move(id, Position::new(*x, *y))),
            Event::Call { .. } => Ok(self.apply_call(id)),
        }
    }

    fn apply_move(&mut self, id: &str, pos: Position) -> StepOutcome {
        self.positions.insert(id.to_string(), pos);
        let (cell, rx) = select_cell(pos, &self.network);
        let mut messages = Vec::new();
        let before = self.hlr[id].vlr;
        let dropped = rx < self.network.drop_threshold_dbm();
        let after = (!dropped).then_some(cell.lac);

        if dropped {
            self.metrics.dropped_signals += 1;
            messages.push(Message::DroppedSignal {
                subscriber: id.to_string(),
                rx_dbm: rx,
            });
        }
        let lac_changed = after.is_some() && after != before;
        if before != after {
            if let Some(old) = before {
                self.vlrs.get_mut(&old).expect("pointer names a VLR").cache.remove(id);
                messages.push(Message::Deregister {
                    subscriber: id.to_string(),
                    lac: old,
                });
            }
            let entry = self.hlr.get_mut(id).expect("checked in step");
            entry.vlr = after;
            if let Some(new) = after {
                entry.transitions += 1;
                let profile = entry.profile.clone();
                self.vlrs
                    .get_mut(&new)
                    .expect("every lac has a VLR")
                    .cache
                    .insert(id.to_string(), profile);
                self.metrics.location_updates += 1;
                self.metrics.profile_transfers += 1;
                messages.push(Message::LocationUpdate {
                    subscriber: id.to_string(),
                    from: before,
                    to: new,
                });
                messages.push(Message::ProfileTransfer {
                    subscriber: id.to_string(),
                    lac: new,
                });
            }
        }
        StepOutcome {
            serving: after.map(|_| cell),
            rx_dbm: rx,
            lac_changed,
            dropped,
            messages,
        }
    }

    fn apply_call(&mut self, id: &str) -> StepOutcome {
        let pos = self.positions[id];
        let (cell, rx) = select_cell(pos, &self.network);
        self.metrics.paging_requests += 1;
        let message = match self.hlr[id].vlr {
            Some(lac) => {
                let cells = self.network.cells_in_lac(lac);
                self.metrics.cells_paged += cells as u64;
                Message::Page {
                    subscriber: id.to_string(),
                    lac,
                    cells,
                }
            }
            None => {
                self.metrics.failed_pages += 1;
                Message::PageFailed {
                    subscriber: id.to_string(),
                }
            }
        };
        StepOutcome {
            serving: self.hlr[id].vlr.map(|_| cell),
            rx_dbm: rx,
            lac_changed: false,
            dropped: false,
            messages: vec![message],
        }
    }

    /// Registration uniqueness and counter conservation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (id, entry) in &self.hlr {
            let holders: Vec<u32> = self
                .vlrs
                .iter()
                .filter(|(_, v)| v.cache.contains_key(id))
                .map(|(l, _)| *l)
                .collect();
            let expected: Vec<u32> = entry.vlr.into_iter().collect();
            if holders != expected {
                return Err(format!(
                    "subscriber {id}: HLR points at {:?} but cached in {holders:?}",
                    entry.vlr
                ));
            }
        }
        for (lac, v) in &self.vlrs {
            if let Some(stray) = v.cache.keys().find(|k| !self.hlr.contains_key(*k)) {
                return Err(format!("VLR {lac} caches unknown subscriber {stray}"));
            }
        }
        let m = &self.metrics;
        if m.profile_transfers != m.location_updates {
            return Err(format!(
                "{} transfers for {} location updates",
                m.profile_transfers, m.location_updates
            ));
        }
        let transitions: u64 = self.hlr.values().map(|e| e.transitions).sum();
        if transitions != m.location_updates {
            return Err(format!(
                "HLR transitions {transitions} differ from location updates {}",
                m.location_updates
            ));
        }
        if m.failed_pages > m.paging_requests {
            return Err("more failed pages than paging requests".into());
        }
        Ok(())
    }
}
