use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Network, Position};
use super::world::{Event, Profile, SimMetrics, StepOutcome, World};
use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubscriberSpec {
    Id(String),
    Placed {
        id: String,
        #[serde(default)]
        x: f64,
        #[serde(default)]
        y: f64,
        #[serde(default)]
        profile: Profile,
    },
}

impl SubscriberSpec {
    fn resolve(&self) -> (String, Position, Profile) {
        match self {
            SubscriberSpec::Id(id) => (id.clone(), Position::new(0.0, 0.0), Profile::new()),
            SubscriberSpec::Placed { id, x, y, profile } => {
                (id.clone(), Position::new(*x, *y), profile.clone())
            }
        }
    }
}

pub const DEFAULT_CALL_PROBABILITY: f64 = 0.1;
/// How far past the outermost cells a random walk may wander, in km.
pub const DEFAULT_WALK_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomWalk {
    pub seed: u64,
    pub ticks: u64,
    pub step: f64,
    #[serde(default = "default_call_probability")]
    pub call_probability: f64,
    /// `[xmin, ymin, xmax, ymax]`; defaults to the cell bounding box plus a
    /// margin.
    #[serde(default)]
    pub bounds: Option<[f64; 4]>,
}

fn default_call_probability() -> f64 {
    DEFAULT_CALL_PROBABILITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub subscribers: Vec<SubscriberSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<Event>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_walk: Option<RandomWalk>,
}

/// One row of the metrics trace. Counters are running totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub event: String,
    pub subscriber: String,
    pub lac: Option<u32>,
    pub cid: Option<u32>,
    pub rx_dbm: f64,
    pub lac_changed: bool,
    pub dropped: bool,
    pub location_updates: u64,
    pub profile_transfers: u64,
    pub paging_requests: u64,
    pub cells_paged: u64,
    pub failed_pages: u64,
    pub dropped_signals: u64,
}

enum Source {
    Scripted(std::vec::IntoIter<Event>),
    Walk {
        rng: Box<ChaCha8Rng>,
        remaining: u64,
        walk: RandomWalk,
        bounds: [f64; 4],
        ids: Vec<String>,
    },
}

/// A world plus its event stream, advanced one tick at a time.
pub struct Simulation {
    world: World,
    source: Source,
    tick: u64,
}

impl Simulation {
    /// `seed` overrides the random walk's own seed.
    pub fn new(network: Network, scenario: &Scenario, seed: Option<u64>) -> Result<Self, SimError> {
        let world = World::new(network, scenario.subscribers.iter().map(SubscriberSpec::resolve))?;
        let source = match (&scenario.events, &scenario.random_walk) {
            (Some(events), None) => {
                if let Some(e) = events
                    .iter()
                    .find(|e| !world.hlr().contains_key(e.subscriber()))
                {
                    return Err(SimError::UnknownSubscriber(e.subscriber().to_string()));
                }
                Source::Scripted(events.clone().into_iter())
            }
            (None, Some(walk)) => {
                if !(walk.step.is_finite() && walk.step >= 0.0)
                    || !(0.0..=1.0).contains(&walk.call_probability)
                {
                    return Err(SimError::BadScenario("random walk step or call probability out of range".into()));
                }
                let bounds = walk.bounds.unwrap_or_else(|| {
                    let (lo, hi) = world.network().bounds();
                    [
                        lo.x - DEFAULT_WALK_MARGIN,
                        lo.y - DEFAULT_WALK_MARGIN,
                        hi.x + DEFAULT_WALK_MARGIN,
                        hi.y + DEFAULT_WALK_MARGIN,
                    ]
                });
                if !(bounds[0] <= bounds[2] && bounds[1] <= bounds[3]) {
                    return Err(SimError::BadScenario(format!("empty walk bounds {bounds:?}")));
                }
                let ids: Vec<String> = world.subscribers().map(String::from).collect();
                if ids.is_empty() && walk.ticks > 0 {
                    return Err(SimError::BadScenario("random walk without subscribers".into()));
                }
                Source::Walk {
                    rng: Box::new(ChaCha8Rng::seed_from_u64(seed.unwrap_or(walk.seed))),
                    remaining: walk.ticks,
                    walk: walk.clone(),
                    bounds,
                    ids,
                }
            }
            _ => {
                return Err(SimError::BadScenario(
                    "scenario needs exactly one of `events` and `random_walk`".into(),
                ))
            }
        };
        Ok(Self {
            world,
            source,
            tick: 0,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    fn next_event(&mut self) -> Option<Event> {
        match &mut self.source {
            Source::Scripted(it) => it.next(),
            Source::Walk {
                rng,
                remaining,
                walk,
                bounds,
                ids,
            } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                let id = ids[rng.gen_range(0..ids.len())].clone();
                if rng.gen_bool(walk.call_probability) {
                    return Some(Event::Call { subscriber: id });
                }
                let angle = rng.gen::<f64>() * TAU;
                let p = self.world.position(&id).expect("walk ids come from the world");
                Some(Event::Move {
                    x: (p.x + walk.step * angle.cos()).clamp(bounds[0], bounds[2]),
                    y: (p.y + walk.step * angle.sin()).clamp(bounds[1], bounds[3]),
                    subscriber: id,
                })
            }
        }
    }

    /// Runs one tick; `None` once the scenario is exhausted.
    pub fn advance(&mut self) -> Option<Result<(TickRecord, StepOutcome), SimError>> {
        let event = self.next_event()?;
        Some(self.world.step(&event).map(|out| {
            self.tick += 1;
            let m = self.world.metrics();
            let record = TickRecord {
                tick: self.tick,
                event: match event {
                    Event::Move { .. } => "move".into(),
                    Event::Call { .. } => "call".into(),
                },
                subscriber: event.subscriber().to_string(),
                lac: out.serving.map(|c| c.lac),
                cid: out.serving.map(|c| c.cid),
                rx_dbm: out.rx_dbm,
                lac_changed: out.lac_changed,
                dropped: out.dropped,
                location_updates: m.location_updates,
                profile_transfers: m.profile_transfers,
                paging_requests: m.paging_requests,
                cells_paged: m.cells_paged,
                failed_pages: m.failed_pages,
                dropped_signals: m.dropped_signals,
            };
            (record, out)
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub trace: Vec<TickRecord>,
    pub totals: SimMetrics,
}

pub fn run(network: Network, scenario: &Scenario, seed: Option<u64>) -> Result<SimRun, SimError> {
    let mut sim = Simulation::new(network, scenario, seed)?;
    let mut trace = Vec::new();
    while let Some(step) = sim.advance() {
        trace.push(step?.0);
    }
    Ok(SimRun {
        trace,
        totals: sim.world().metrics(),
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TickRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    if trace.is_empty() {
        // Header only, so empty runs still produce a well-formed file.
        w.write_record([
            "tick",
            "event",
            "subscriber",
            "lac",
            "cid",
            "rx_dbm",
            "lac_changed",
            "dropped",
            "location_updates",
            "profile_transfers",
            "paging_requests",
            "cells_paged",
            "failed_pages",
            "dropped_signals",
        ])?;
    }
    w.flush()?;
    Ok(())
}
