//! Deterministic HLR/VLR location-management simulator.
//!
//! Cells carry a log-distance radio model; subscribers move and receive
//! calls one event per tick. Crossing a location area boundary deregisters
//! the subscriber from the old VLR and copies the profile from the HLR to
//! the new one. Calls page every cell of the pointed location area. Metric
//! windows feed the network-risk knowledge base.

mod network;
mod risk;
mod scenario;
mod world;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use network::{
    build_network, select_cell, signal_strength, Cell, CellConfig, CellId, Network, NetworkConfig,
    PathLoss, Position, DEFAULT_DROP_THRESHOLD_DBM, DEFAULT_TX_POWER_BOUNDS,
};
pub use risk::{assess_network_risk, MetricsWindow};
pub use scenario::{
    run, write_trace_csv, RandomWalk, Scenario, SimRun, Simulation, SubscriberSpec, TickRecord,
    DEFAULT_CALL_PROBABILITY, DEFAULT_WALK_MARGIN,
};
pub use world::{Event, HlrEntry, Message, Profile, SimMetrics, StepOutcome, VlrState, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("network has no cells")]
    EmptyNetwork,
    #[error("duplicate cell {0}")]
    DuplicateCell(CellId),
    #[error("cell {0} has a non-finite position")]
    BadPosition(CellId),
    #[error("cell {cell} tx power {tx_power} dBm outside {bounds:?}")]
    TxPowerOutOfRange {
        cell: CellId,
        tx_power: f64,
        bounds: [f64; 2],
    },
    #[error("path loss needs finite pl0, n > 0 and d0 > 0")]
    BadPathLoss,
    #[error("drop threshold {0} is not finite")]
    BadDropThreshold(f64),
    #[error("unknown subscriber {0:?}")]
    UnknownSubscriber(String),
    #[error("subscriber {0:?} listed twice")]
    DuplicateSubscriber(String),
    #[error("subscriber {0:?} has a non-finite position")]
    BadSubscriberPosition(String),
    #[error("bad scenario: {0}")]
    BadScenario(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, SimError> {
    let text = fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SimError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_network(path: &Path) -> Result<Network, SimError> {
    build_network(&read_json(path)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, SimError> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{load_kb, RiskLevel};

    fn data(rel: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
    }

    fn cell(lac: u32, cid: u32, x: f64, y: f64) -> CellConfig {
        CellConfig {
            mnc: 1,
            lac,
            cid,
            x,
            y,
            tx_power: 43.0,
        }
    }

    fn config(cells: Vec<CellConfig>) -> NetworkConfig {
        NetworkConfig {
            cells,
            drop_threshold_dbm: DEFAULT_DROP_THRESHOLD_DBM,
            pathloss: PathLoss::default(),
            tx_power_bounds: DEFAULT_TX_POWER_BOUNDS,
        }
    }

    fn grid() -> Network {
        load_network(&data("network/grid_4x4.json")).unwrap()
    }

    fn mv(s: &str, x: f64, y: f64) -> Event {
        Event::Move {
            subscriber: s.into(),
            x,
            y,
        }
    }

    #[test]
    fn build_network_rules() {
        let n = build_network(&config(vec![cell(1, 1, 0.0, 0.0), cell(2, 1, 1.0, 0.0)])).unwrap();
        assert_eq!(n.vlr_count(), 2);
        assert!(matches!(
            build_network(&config(vec![cell(1, 1, 0.0, 0.0), cell(1, 1, 1.0, 0.0)])),
            Err(SimError::DuplicateCell(_))
        ));
        assert!(matches!(build_network(&config(vec![])), Err(SimError::EmptyNetwork)));
        let mut hot = cell(1, 1, 0.0, 0.0);
        hot.tx_power = 500.0;
        assert!(matches!(
            build_network(&config(vec![hot])),
            Err(SimError::TxPowerOutOfRange { .. })
        ));
        let g = grid();
        assert_eq!(g.cells().len(), 16);
        assert_eq!(g.vlr_count(), 4);
        assert!(g.lacs().all(|l| g.cells_in_lac(l) == 4));
    }

    #[test]
    fn path_loss_closed_forms() {
        let c = Cell {
            id: CellId {
                mnc: 1,
                lac: 1,
                cid: 1,
            },
            position: Position::new(0.0, 0.0),
            tx_power: 43.0,
        };
        let pl = PathLoss::default();
        assert_eq!(signal_strength(&c, Position::new(0.01, 0.0), &pl), 3.0);
        assert_eq!(signal_strength(&c, Position::new(0.0, 0.0), &pl), 3.0);
        let near = signal_strength(&c, Position::new(0.5, 0.0), &pl);
        let far = signal_strength(&c, Position::new(1.0, 0.0), &pl);
        assert!((near - far - 30.0 * 2f64.log10()).abs() < 1e-9);
        assert!((near - far - 9.03).abs() < 0.01);
    }

    #[test]
    fn select_cell_rules() {
        let g = grid();
        for c in g.cells() {
            assert_eq!(select_cell(c.position, &g).0, c.id);
        }
        let pair = build_network(&config(vec![cell(2, 5, 1.0, 0.0), cell(1, 9, -1.0, 0.0)])).unwrap();
        assert_eq!(select_cell(Position::new(0.0, 3.0), &pair).0.lac, 1);
    }

    #[test]
    fn move_within_and_across_lacs() {
        let g = grid();
        let mut w = World::new(g, [("a".to_string(), Position::new(0.0, 0.0), Profile::new())]).unwrap();
        let out = w.step(&mv("a", 1.0, 0.2)).unwrap();
        assert!(!out.lac_changed);
        assert_eq!(w.metrics().location_updates, 0);
        let out = w.step(&mv("a", 2.0, 0.0)).unwrap();
        assert!(out.lac_changed);
        assert_eq!(w.metrics().location_updates, 1);
        assert_eq!(w.metrics().profile_transfers, 1);
        assert!(!w.vlrs()[&1].cache.contains_key("a"));
        assert!(w.vlrs()[&2].cache.contains_key("a"));
        assert_eq!(w.hlr()["a"].vlr, Some(2));
        w.check_invariants().unwrap();
    }

    #[test]
    fn unknown_subscriber_leaves_world_untouched() {
        let mut w = World::new(grid(), [("a".to_string(), Position::new(0.0, 0.0), Profile::new())]).unwrap();
        let before = w.clone();
        assert!(matches!(w.step(&mv("zz", 1.0, 1.0)), Err(SimError::UnknownSubscriber(_))));
        assert!(matches!(w.step(&mv("a", f64::NAN, 1.0)), Err(SimError::BadSubscriberPosition(_))));
        assert_eq!(w, before);
    }

    #[test]
    fn drop_detaches_and_reattach_counts() {
        let mut w = World::new(grid(), [("a".to_string(), Position::new(0.0, 0.0), Profile::new())]).unwrap();
        let out = w.step(&mv("a", 200.0, 0.0)).unwrap();
        assert!(out.dropped && !out.lac_changed);
        assert_eq!(w.hlr()["a"].vlr, None);
        let page = w.step(&Event::Call { subscriber: "a".into() }).unwrap();
        assert!(matches!(page.messages[0], Message::PageFailed { .. }));
        let out = w.step(&mv("a", 0.0, 0.0)).unwrap();
        assert!(out.lac_changed);
        assert_eq!(w.metrics().location_updates, 1);
        let page = w.step(&Event::Call { subscriber: "a".into() }).unwrap();
        assert!(matches!(page.messages[0], Message::Page { lac: 1, cells: 4, .. }));
        w.check_invariants().unwrap();
    }

    #[test]
    fn scripted_walk_crosses_five_times() {
        let r = run(grid(), &load_scenario(&data("scenarios/scripted_walk.json")).unwrap(), None).unwrap();
        assert_eq!(r.trace.len(), 10);
        assert_eq!(r.totals.location_updates, 5);
        assert_eq!(r.totals.profile_transfers, 5);
    }

    #[test]
    fn empty_and_stationary_scenarios() {
        let empty = Scenario {
            subscribers: vec![SubscriberSpec::Id("a".into())],
            events: Some(vec![]),
            random_walk: None,
        };
        assert_eq!(run(grid(), &empty, None).unwrap().totals, SimMetrics::default());
        let r = run(grid(), &load_scenario(&data("scenarios/stationary.json")).unwrap(), None).unwrap();
        assert_eq!(r.totals.ticks, 100);
        assert_eq!(r.totals.location_updates, 0);
        assert_eq!(r.totals.paging_requests, 10);
    }

    #[test]
    fn scenario_shape_errors() {
        let both = Scenario {
            subscribers: vec![],
            events: Some(vec![]),
            random_walk: Some(RandomWalk {
                seed: 1,
                ticks: 1,
                step: 0.1,
                call_probability: 0.1,
                bounds: None,
            }),
        };
        assert!(matches!(Simulation::new(grid(), &both, None), Err(SimError::BadScenario(_))));
        let stray = Scenario {
            subscribers: vec![SubscriberSpec::Id("a".into())],
            events: Some(vec![mv("b", 0.0, 0.0)]),
            random_walk: None,
        };
        assert!(matches!(run(grid(), &stray, None), Err(SimError::UnknownSubscriber(_))));
    }

    #[test]
    fn seeded_walk_is_reproducible() {
        let mut s = load_scenario(&data("scenarios/random_walk.json")).unwrap();
        s.random_walk.as_mut().unwrap().ticks = 500;
        let csv = |seed| {
            let mut buf = Vec::new();
            write_trace_csv(&run(grid(), &s, seed).unwrap().trace, &mut buf).unwrap();
            buf
        };
        assert_eq!(csv(None), csv(None));
        assert_ne!(csv(None), csv(Some(99)));
    }

    #[test]
    fn network_risk_levels() {
        let kb = load_kb(&data("kb/network_risk/manifest.json")).unwrap();
        let zero = assess_network_risk(&MetricsWindow::default(), &kb).unwrap();
        assert_eq!(zero.level, RiskLevel::LR);
        let calm = run(grid(), &load_scenario(&data("scenarios/stationary.json")).unwrap(), None).unwrap();
        let a = assess_network_risk(&MetricsWindow::from_trace(&calm.trace), &kb).unwrap();
        assert_eq!(a.level, RiskLevel::LR);
        let bad = run(grid(), &load_scenario(&data("scenarios/saturated_drop.json")).unwrap(), None).unwrap();
        let w = MetricsWindow::from_trace(&bad.trace);
        assert_eq!(w.drop_rate(), 1.0);
        let b = assess_network_risk(&w, &kb).unwrap();
        assert_eq!(b.level, RiskLevel::HR);
        assert_eq!(assess_network_risk(&w, &kb).unwrap(), b);
    }
}
