use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub mnc: u32,
    pub lac: u32,
    pub cid: u32,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.mnc, self.lac, self.cid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Log-distance path loss: `rx = tx - pl0 - 10 n log10(max(d, d0) / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLoss {
    pub pl0: f64,
    pub n: f64,
    pub d0: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            pl0: 40.0,
            n: 3.0,
            d0: 0.01,
        }
    }
}

pub const DEFAULT_DROP_THRESHOLD_DBM: f64 = -110.0;
pub const DEFAULT_TX_POWER_BOUNDS: [f64; 2] = [0.0, 60.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    pub position: Position,
    pub tx_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub mnc: u32,
    pub lac: u32,
    pub cid: u32,
    pub x: f64,
    pub y: f64,
    pub tx_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub cells: Vec<CellConfig>,
    #[serde(default = "default_drop")]
    pub drop_threshold_dbm: f64,
    #[serde(default)]
    pub pathloss: PathLoss,
    #[serde(default = "default_tx_bounds")]
    pub tx_power_bounds: [f64; 2],
}

fn default_drop() -> f64 {
    DEFAULT_DROP_THRESHOLD_DBM
}

fn default_tx_bounds() -> [f64; 2] {
    DEFAULT_TX_POWER_BOUNDS
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    cells: Vec<Cell>,
    drop_threshold_dbm: f64,
    pathloss: PathLoss,
    /// Cell indices per location area.
    lacs: BTreeMap<u32, Vec<usize>>,
}

/// Validates `config` into a network with one location area per distinct lac.
pub fn build_network(config: &NetworkConfig) -> Result<Network, SimError> {
    if config.cells.is_empty() {
        return Err(SimError::EmptyNetwork);
    }
    let pl = config.pathloss;
    if !(pl.pl0.is_finite() && pl.n.is_finite() && pl.n > 0.0 && pl.d0.is_finite() && pl.d0 > 0.0) {
        return Err(SimError::BadPathLoss);
    }
    if !config.drop_threshold_dbm.is_finite() {
        return Err(SimError::BadDropThreshold(config.drop_threshold_dbm));
    }
    let [lo, hi] = config.tx_power_bounds;
    let mut seen = BTreeSet::new();
    let mut cells = Vec::with_capacity(config.cells.len());
    let mut lacs: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for c in &config.cells {
        let id = CellId {
            mnc: c.mnc,
            lac: c.lac,
            cid: c.cid,
        };
        // (lac, cid) unique implies (mnc, lac, cid) unique.
        if !seen.insert((c.lac, c.cid)) {
            return Err(SimError::DuplicateCell(id));
        }
        let position = Position::new(c.x, c.y);
        if !position.is_finite() {
            return Err(SimError::BadPosition(id));
        }
        if !(c.tx_power >= lo && c.tx_power <= hi) {
            return Err(SimError::TxPowerOutOfRange {
                cell: id,
                tx_power: c.tx_power,
                bounds: config.tx_power_bounds,
            });
        }
        lacs.entry(c.lac).or_default().push(cells.len());
        cells.push(Cell {
            id,
            position,
            tx_power: c.tx_power,
        });
    }
    Ok(Network {
        cells,
        drop_threshold_dbm: config.drop_threshold_dbm,
        pathloss: pl,
        lacs,
    })
}

/// Received power from `cell` at `pos`.
pub fn signal_strength(cell: &Cell, pos: Position, pl: &PathLoss) -> f64 {
    let d = cell.position.distance(pos).max(pl.d0);
    cell.tx_power - pl.pl0 - 10.0 * pl.n * (d / pl.d0).log10()
}

/// Strongest cell at `pos`; equal signals go to the lower `(lac, cid)`.
pub fn select_cell(pos: Position, network: &Network) -> (CellId, f64) {
    let mut best: Option<(&Cell, f64)> = None;
    for c in &network.cells {
        let rx = signal_strength(c, pos, &network.pathloss);
        let better = match best {
            None => true,
            Some((b, brx)) => rx > brx || (rx == brx && (c.id.lac, c.id.cid) < (b.id.lac, b.id.cid)),
        };
        if better {
            best = Some((c, rx));
        }
    }
    let (c, rx) = best.expect("networks are never empty");
    (c.id, rx)
}

impl Network {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn lacs(&self) -> impl Iterator<Item = u32> + '_ {
        self.lacs.keys().copied()
    }

    pub fn vlr_count(&self) -> usize {
        self.lacs.len()
    }

    pub fn cells_in_lac(&self, lac: u32) -> usize {
        self.lacs.get(&lac).map_or(0, Vec::len)
    }

    pub fn drop_threshold_dbm(&self) -> f64 {
        self.drop_threshold_dbm
    }

    pub fn pathloss(&self) -> &PathLoss {
        &self.pathloss
    }

    /// Bounding box of the cell positions as `(min, max)`.
    pub fn bounds(&self) -> (Position, Position) {
        let xs = self.cells.iter().map(|c| c.position.x);
        let ys = self.cells.iter().map(|c| c.position.y);
        (
            Position::new(xs.clone().fold(f64::INFINITY, f64::min), ys.clone().fold(f64::INFINITY, f64::min)),
            Position::new(xs.fold(f64::NEG_INFINITY, f64::max), ys.fold(f64::NEG_INFINITY, f64::max)),
        )
    }
}
