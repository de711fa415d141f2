use thiserror::Error;

use crate::model::{ChannelId, FlowId, NodeId, PatternKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("mesh must have at least one row and one column")]
    EmptyMesh,
    #[error("wire width must be positive")]
    ZeroWireWidth,
    #[error("channel slot cost must be at least 1")]
    ZeroSlotCost,
    #[error("node {0} lies outside the mesh")]
    OutOfMesh(NodeId),
    #[error("memory controller {0} is not on the array boundary")]
    McNotOnBoundary(NodeId),
    #[error("memory controller {0} listed twice")]
    DuplicateMc(NodeId),
    #[error("hop {from} -> {to} is not between adjacent routers")]
    NonAdjacentHop { from: NodeId, to: NodeId },
    #[error("flow {flow}: participants do not fit a {kind:?} pattern")]
    BadParticipants { flow: FlowId, kind: PatternKind },
    #[error("flow {0} has zero volume")]
    ZeroVolume(FlowId),
    #[error("flow {0} has a QoS deadline before its ready time")]
    DeadlineBeforeReady(FlowId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrafficError {
    #[error("layers demand {demanded} tiles but the mesh has {available}")]
    CapacityExceeded { demanded: usize, available: usize },
    #[error("layer `{layer}` names unknown upstream layer `{upstream}`")]
    DanglingUpstream { layer: String, upstream: String },
    #[error("layer `{0}` appears more than once")]
    DuplicateLayer(String),
    #[error("layer `{0}` has an empty region")]
    EmptyRegion(String),
    #[error("layer `{layer}` lists tile {tile} twice or outside the mesh")]
    BadTile { layer: String, tile: NodeId },
    #[error("tile {tile} is assigned to both `{first}` and `{second}`")]
    RegionOverlap { tile: NodeId, first: String, second: String },
    #[error("layer `{0}`: reduction tile is not part of its region")]
    ReductionTileOutsideRegion(String),
    #[error("layer `{0}`: tensor sizes, iterations and compute slots must be positive")]
    ZeroSize(String),
    #[error("layer `{layer}`: {node} is not a memory controller")]
    UnknownMc { layer: String, node: NodeId },
    #[error("layer `{0}` feeds itself through its upstream chain")]
    UpstreamCycle(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("terminal {0} is unreachable inside the search region")]
    UnreachableTerminal(NodeId),
    #[error("invalid evolutionary search parameters: {0}")]
    InvalidEaParams(&'static str),
    #[error("flow {0}: route revisits a router")]
    LoopInPath(FlowId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("reserved port code {0:03b} in source-route field")]
    MalformedHeader(u8),
    #[error("source-route field is empty")]
    EmptyField,
    #[error("router {node} would need {entries} routing-table entries (limit {limit})")]
    TableOverflow { node: NodeId, entries: usize, limit: usize },
    #[error("no free hardware flow id left for the pattern rooted near {node}")]
    FlowIdsExhausted { node: NodeId },
    #[error("flow {flow}: chunk of {flits} flits exceeds the length field")]
    ChunkTooLong { flow: FlowId, flits: u64 },
    #[error("flow {flow}: header needs {bits} bits but a flit holds {wire_width}")]
    HeaderOverflow { flow: FlowId, bits: u32, wire_width: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("cycle {cycle}: {channel} demanded by legs {legs:?} at once")]
    RuntimeConflict { cycle: u64, channel: ChannelId, legs: Vec<usize> },
    #[error("no flit moved for {budget} cycles before cycle {cycle} with traffic pending")]
    DeadlockDetected { cycle: u64, budget: u64 },
    #[error("schedule assumes {scheduled} slots per hop but routers take {hardware} cycles")]
    SlotCostMismatch { scheduled: u32, hardware: u32 },
    #[error("leg {leg} injected at cycle {cycle} before the data it forwards arrived")]
    DependencyNotMet { leg: usize, cycle: u64 },
    #[error("leg {leg}: router {node} found no route for the head flit")]
    NoRoute { leg: usize, node: NodeId },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("bounded ratio needs a positive computation time")]
    ZeroCompute,
    #[error("workload file: {0}")]
    Parse(String),
    #[error("unsupported workload file version {0}")]
    UnsupportedVersion(u32),
    #[error("{context}: {source}")]
    Cell { context: String, source: Box<Error> },
    #[error("ablation latency increased at stage `{stage}`: {before} -> {after}")]
    AblationNotMonotone { stage: String, before: u64, after: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for validation problems, 3 for simulation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Sim(_) | Error::AblationNotMonotone { .. } => 3,
            Error::Cell { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub fn in_cell(self, context: impl Into<String>) -> Error {
        Error::Cell { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
