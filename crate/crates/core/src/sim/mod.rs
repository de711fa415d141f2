//! Flit-level simulators for the scheduled fabric and the virtual-channel
//! baseline, plus the tile pipeline that turns late data into stalls.

pub mod baseline;
pub mod metro;
pub mod tiles;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ChannelId, FlowId, NodeId};

pub use baseline::{lower_to_unicasts, packetize, simulate_baseline, BaselineParams, BaselineStats, UnicastMessage};
pub use metro::{simulate_metro, MetroParams};
pub use tiles::{simulate_tiles, LayerReport, TileReport, TilesReport};

/// Delivery times of one flow. All values are cycles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowTiming {
    pub flow_id: FlowId,
    /// First flit leaving its source.
    pub injection: u64,
    /// First head flit ejected anywhere.
    pub head_arrival: u64,
    /// Cycle after the last tail flit is ejected.
    pub tail_arrival: u64,
    /// Cycle after the last flit reached each receiving router.
    #[serde(with = "crate::model::map_as_pairs")]
    pub dest_arrival: BTreeMap<NodeId, u64>,
    pub flits_injected: u64,
    pub flits_ejected: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimResult {
    pub flows: BTreeMap<FlowId, FlowTiming>,
    /// Flit-cycles spent on each channel.
    #[serde(with = "crate::model::map_as_pairs")]
    pub channel_busy: BTreeMap<ChannelId, u64>,
    pub makespan: u64,
    /// Flit-cycles a flit sat ready at a crossbar without being forwarded.
    pub blocked_flit_cycles: u64,
    /// Optional per-flit event lines.
    pub trace: Vec<String>,
    /// Buffer statistics, present for baseline runs.
    #[serde(default)]
    pub baseline: Option<BaselineStats>,
}

impl SimResult {
    /// Busy cycles over the makespan, per channel.
    pub fn utilization(&self) -> BTreeMap<ChannelId, f64> {
        let span = self.makespan.max(1) as f64;
        self.channel_busy.iter().map(|(c, b)| (*c, *b as f64 / span)).collect()
    }

    /// Sum over flows of delivery time minus ready time.
    pub fn total_latency(&self, ready: impl Fn(FlowId) -> u64) -> u64 {
        self.flows.values().map(|f| f.tail_arrival.saturating_sub(ready(f.flow_id))).sum()
    }
}

/// Port on the receiving side of a router's crossbar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Port {
    /// Link to or from the neighbour in this direction.
    Dir(crate::model::Direction),
    Local(crate::model::LocalPort),
}
