use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scenario::TickRecord;
use crate::knowledge::{infer, InferError, KnowledgeBase, RiskAssessment};

/// Event counts over a span of ticks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsWindow {
    pub ticks: u64,
    pub location_updates: u64,
    pub dropped_signals: u64,
    pub rx_sum: f64,
    pub rx_samples: u64,
}

impl MetricsWindow {
    pub fn from_trace(trace: &[TickRecord]) -> Self {
        let mut w = Self::default();
        for r in trace {
            w.ticks += 1;
            w.location_updates += u64::from(r.lac_changed);
            w.dropped_signals += u64::from(r.dropped);
            if r.rx_dbm.is_finite() {
                w.rx_sum += r.rx_dbm;
                w.rx_samples += 1;
            }
        }
        w
    }

    pub fn update_rate(&self) -> f64 {
        ratio(self.location_updates, self.ticks)
    }

    pub fn drop_rate(&self) -> f64 {
        ratio(self.dropped_signals, self.ticks)
    }

    /// Mean serving-cell signal. An empty window reads 0 dBm, which the
    /// risk kb clamps to its strongest value.
    pub fn mean_rx_dbm(&self) -> f64 {
        if self.rx_samples == 0 {
            0.0
        } else {
            self.rx_sum / self.rx_samples as f64
        }
    }

    /// The kb inputs `update_rate`, `mean_rx_dbm` and `drop_rate`.
    pub fn inputs(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("update_rate".to_string(), self.update_rate()),
            ("mean_rx_dbm".to_string(), self.mean_rx_dbm()),
            ("drop_rate".to_string(), self.drop_rate()),
        ])
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

pub fn assess_network_risk(
    window: &MetricsWindow,
    kb: &KnowledgeBase,
) -> Result<RiskAssessment, InferError> {
    infer(kb, &window.inputs())
}
