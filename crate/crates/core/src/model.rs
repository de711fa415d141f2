//! Topology, time and traffic domain types shared by every other module.
//!
//! Axis convention: `x` grows eastward, `y` grows southward, and router
//! `(0, 0)` is the north-west corner of the array.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Scheduling time quantum. One slot is one flit crossing one channel.
pub type SlotIndex = u64;

/// Dense flow identifier, assigned in ready-time order by traffic extraction.
pub type FlowId = u32;

/// Router coordinate inside a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub x: u16,
    pub y: u16,
}

impl NodeId {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }

    /// Node one hop away in `dir`, if it stays inside `mesh`.
    pub fn step(self, dir: Direction, mesh: &MeshTopology) -> Option<NodeId> {
        let (x, y) = (self.x as i32, self.y as i32);
        let (nx, ny) = match dir {
            Direction::East => (x + 1, y),
            Direction::South => (x, y + 1),
            Direction::West => (x - 1, y),
            Direction::North => (x, y - 1),
        };
        if nx < 0 || ny < 0 || nx >= mesh.width as i32 || ny >= mesh.height as i32 {
            return None;
        }
        Some(NodeId::new(nx as u16, ny as u16))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Manhattan distance between two routers.
pub fn manhattan(a: NodeId, b: NodeId) -> u32 {
    a.x.abs_diff(b.x) as u32 + a.y.abs_diff(b.y) as u32
}

/// Mesh link directions, in the fixed expansion order used throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    East,
    South,
    West,
    North,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::East, Direction::South, Direction::West, Direction::North];

    /// Direction of the single hop `from -> to`, if the two are adjacent.
    pub fn between(from: NodeId, to: NodeId) -> Option<Direction> {
        match (to.x as i32 - from.x as i32, to.y as i32 - from.y as i32) {
            (1, 0) => Some(Direction::East),
            (0, 1) => Some(Direction::South),
            (-1, 0) => Some(Direction::West),
            (0, -1) => Some(Direction::North),
            _ => None,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
            Direction::North => Direction::South,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_x(self) -> bool {
        matches!(self, Direction::East | Direction::West)
    }
}

/// Which local endpoint of a router a flow enters or leaves through.
///
/// Memory controllers hang off boundary routers through their own local
/// port, separate from the tile's port on the same router.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum LocalPort {
    #[default]
    Tile,
    Mc,
}

/// A directed resource a flit occupies for one slot: a mesh link or a local port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelId {
    Link { from: NodeId, to: NodeId },
    Inject { node: NodeId, port: LocalPort },
    Eject { node: NodeId, port: LocalPort },
}

impl ChannelId {
    pub fn link(from: NodeId, to: NodeId) -> Self {
        ChannelId::Link { from, to }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelId::Link { from, to } => write!(f, "{from}->{to}"),
            ChannelId::Inject { node, port } => write!(f, "inject{node}:{port:?}"),
            ChannelId::Eject { node, port } => write!(f, "eject{node}:{port:?}"),
        }
    }
}

/// Mesh array with memory controllers attached to boundary routers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshTopology {
    pub width: u16,
    pub height: u16,
    pub mc_nodes: Vec<NodeId>,
    /// Flit size F in bits.
    pub wire_width: u32,
    /// Slots needed by a head flit to cross one hop (S_c).
    pub channel_slot_cost: u32,
}

impl MeshTopology {
    /// Mesh with memory controllers at the middle of the four edges.
    pub fn new(width: u16, height: u16, wire_width: u32) -> Result<Self, ModelError> {
        let mc_nodes = default_mc_nodes(width, height);
        Self::with_mcs(width, height, mc_nodes, wire_width, 1)
    }

    pub fn with_mcs(
        width: u16,
        height: u16,
        mc_nodes: Vec<NodeId>,
        wire_width: u32,
        channel_slot_cost: u32,
    ) -> Result<Self, ModelError> {
        let mesh = Self { width, height, mc_nodes, wire_width, channel_slot_cost };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.width == 0 || self.height == 0 {
            return Err(ModelError::EmptyMesh);
        }
        if self.wire_width == 0 {
            return Err(ModelError::ZeroWireWidth);
        }
        if self.channel_slot_cost == 0 {
            return Err(ModelError::ZeroSlotCost);
        }
        for (i, mc) in self.mc_nodes.iter().enumerate() {
            if !self.contains(*mc) {
                return Err(ModelError::OutOfMesh(*mc));
            }
            if !self.on_boundary(*mc) {
                return Err(ModelError::McNotOnBoundary(*mc));
            }
            if self.mc_nodes[..i].contains(mc) {
                return Err(ModelError::DuplicateMc(*mc));
            }
        }
        Ok(())
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.x < self.width && n.y < self.height
    }

    pub fn on_boundary(&self, n: NodeId) -> bool {
        n.x == 0 || n.y == 0 || n.x + 1 == self.width || n.y + 1 == self.height
    }

    pub fn node_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Row-major dense index.
    pub fn index(&self, n: NodeId) -> usize {
        n.y as usize * self.width as usize + n.x as usize
    }

    pub fn node(&self, index: usize) -> NodeId {
        NodeId::new((index % self.width as usize) as u16, (index / self.width as usize) as u16)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(|i| self.node(i))
    }

    pub fn is_mc(&self, n: NodeId) -> bool {
        self.mc_nodes.contains(&n)
    }

    /// Every directed link plus the local injection/ejection ports.
    pub fn channels(&self) -> Vec<ChannelId> {
        let mut out = Vec::new();
        for n in self.nodes() {
            for d in Direction::ALL {
                if let Some(m) = n.step(d, self) {
                    out.push(ChannelId::link(n, m));
                }
            }
            out.push(ChannelId::Inject { node: n, port: LocalPort::Tile });
            out.push(ChannelId::Eject { node: n, port: LocalPort::Tile });
            if self.is_mc(n) {
                out.push(ChannelId::Inject { node: n, port: LocalPort::Mc });
                out.push(ChannelId::Eject { node: n, port: LocalPort::Mc });
            }
        }
        out
    }
}

/// Two memory controllers at the middle of each edge, deduplicated on tiny meshes.
pub fn default_mc_nodes(width: u16, height: u16) -> Vec<NodeId> {
    let mid = |len: u16| -> Vec<u16> {
        if len >= 2 {
            vec![(len - 1) / 2, len / 2]
        } else {
            vec![0]
        }
    };
    let mut out: Vec<NodeId> = Vec::new();
    let mut push = |n: NodeId| {
        if !out.contains(&n) {
            out.push(n);
        }
    };
    for x in mid(width) {
        push(NodeId::new(x, 0));
    }
    for y in mid(height) {
        push(NodeId::new(width - 1, y));
    }
    for x in mid(width) {
        push(NodeId::new(x, height - 1));
    }
    for y in mid(height) {
        push(NodeId::new(0, y));
    }
    out
}

/// Directed links traversed by a path, one per hop.
pub fn channels_of_path(path: &[NodeId]) -> Result<Vec<ChannelId>, ModelError> {
    path.windows(2)
        .map(|w| {
            if manhattan(w[0], w[1]) == 1 {
                Ok(ChannelId::link(w[0], w[1]))
            } else {
                Err(ModelError::NonAdjacentHop { from: w[0], to: w[1] })
            }
        })
        .collect()
}

/// Number of flits needed to carry `volume` bits over `wire_width`-bit flits.
pub fn flit_count(volume: u64, wire_width: u32) -> u64 {
    volume.div_ceil(wire_width as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternKind {
    Multicast,
    Reduce,
    LinkTransfer,
    Unicast,
}

/// What a flow carries, relative to the layer that generated it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Weights,
    Inputs,
    PsumReduce,
    OutputSpill,
    InterLayer,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Weights => "weights",
            Provenance::Inputs => "inputs",
            Provenance::PsumReduce => "psum_reduce",
            Provenance::OutputSpill => "output_spill",
            Provenance::InterLayer => "inter_layer",
        }
    }
}

/// One logical communication pattern.
///
/// For `Reduce` flows `volume` is the partial-result size each source
/// contributes; for every other kind it is the size delivered to each
/// destination.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficFlow {
    pub id: FlowId,
    pub kind: PatternKind,
    pub volume: u64,
    pub sources: Vec<NodeId>,
    pub destinations: Vec<NodeId>,
    pub ready_time: SlotIndex,
    pub qos_deadline: SlotIndex,
    #[serde(default)]
    pub src_port: LocalPort,
    #[serde(default)]
    pub dst_port: LocalPort,
}

impl TrafficFlow {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok_shape = match self.kind {
            PatternKind::Multicast => self.sources.len() == 1 && !self.destinations.is_empty(),
            PatternKind::Reduce => self.destinations.len() == 1 && !self.sources.is_empty(),
            PatternKind::LinkTransfer | PatternKind::Unicast => self.sources.len() == 1 && self.destinations.len() == 1,
        };
        if !ok_shape {
            return Err(ModelError::BadParticipants { flow: self.id, kind: self.kind });
        }
        if self.volume == 0 {
            return Err(ModelError::ZeroVolume(self.id));
        }
        if self.ready_time > self.qos_deadline {
            return Err(ModelError::DeadlineBeforeReady(self.id));
        }
        Ok(())
    }

    /// The single terminal on the far side of a collective.
    pub fn terminal(&self) -> NodeId {
        match self.kind {
            PatternKind::Reduce => self.destinations[0],
            _ => self.sources[0],
        }
    }

    /// Participants on the region side of a collective.
    pub fn group(&self) -> &[NodeId] {
        match self.kind {
            PatternKind::Reduce => &self.sources,
            _ => &self.destinations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlitRole {
    Head,
    Body,
    Tail,
    HeadTail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flit {
    pub flow_id: FlowId,
    pub seq: u32,
    pub role: FlitRole,
    pub payload_bits: u32,
}

/// Serde adapter for maps with non-string keys: written as a list of
/// `[key, value]` pairs so JSON can carry them.
pub(crate) mod map_as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, K: Serialize, V: Serialize>(m: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D, K, V>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        D: Deserializer<'de>,
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(x: u16, y: u16) -> NodeId {
        NodeId::new(x, y)
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan(n(0, 0), n(0, 0)), 0);
        assert_eq!(manhattan(n(0, 0), n(2, 3)), 5);
        assert_eq!(manhattan(n(1, 2), n(3, 0)), 4);
    }

    #[test]
    fn channels_of_path_examples() {
        assert!(channels_of_path(&[n(0, 0)]).unwrap().is_empty());
        assert_eq!(
            channels_of_path(&[n(0, 0), n(1, 0), n(1, 1)]).unwrap(),
            vec![ChannelId::link(n(0, 0), n(1, 0)), ChannelId::link(n(1, 0), n(1, 1))]
        );
        assert!(matches!(channels_of_path(&[n(0, 0), n(2, 0)]), Err(ModelError::NonAdjacentHop { .. })));
    }

    #[test]
    fn flit_count_examples() {
        assert_eq!(flit_count(512, 256), 2);
        assert_eq!(flit_count(513, 256), 3);
        assert_eq!(flit_count(256, 2048), 1);
    }

    #[test]
    fn channel_count_matches_closed_form() {
        for (w, h) in [(1u16, 1u16), (2, 3), (4, 4), (16, 16), (5, 2)] {
            let mesh = MeshTopology::new(w, h, 256).unwrap();
            let links = mesh.channels().iter().filter(|c| matches!(c, ChannelId::Link { .. })).count();
            let (w, h) = (w as usize, h as usize);
            assert_eq!(links, 2 * (2 * w * h - w - h));
            let local = mesh.channels().len() - links;
            assert_eq!(local, 2 * w * h + 2 * mesh.mc_nodes.len());
        }
    }

    #[test]
    fn default_mcs_sit_mid_edge() {
        let mesh = MeshTopology::new(16, 16, 256).unwrap();
        assert_eq!(mesh.mc_nodes.len(), 8);
        assert!(mesh.mc_nodes.contains(&n(7, 0)) && mesh.mc_nodes.contains(&n(8, 0)));
        assert!(mesh.mc_nodes.contains(&n(0, 7)) && mesh.mc_nodes.contains(&n(15, 8)));
        assert!(mesh.mc_nodes.iter().all(|m| mesh.on_boundary(*m)));
    }

    #[test]
    fn rejects_bad_mesh() {
        assert!(matches!(MeshTopology::new(4, 4, 0), Err(ModelError::ZeroWireWidth)));
        assert!(matches!(MeshTopology::with_mcs(4, 4, vec![n(1, 1)], 256, 1), Err(ModelError::McNotOnBoundary(_))));
        assert!(matches!(
            MeshTopology::with_mcs(4, 4, vec![n(1, 0), n(1, 0)], 256, 1),
            Err(ModelError::DuplicateMc(_))
        ));
    }

    #[test]
    fn flow_shape_validation() {
        let mut f = TrafficFlow {
            id: 0,
            kind: PatternKind::Multicast,
            volume: 10,
            sources: vec![n(0, 0), n(1, 0)],
            destinations: vec![n(2, 2)],
            ready_time: 0,
            qos_deadline: 5,
            src_port: LocalPort::Tile,
            dst_port: LocalPort::Tile,
        };
        assert!(f.validate().is_err());
        f.kind = PatternKind::Reduce;
        assert!(f.validate().is_ok());
        f.ready_time = 9;
        assert!(matches!(f.validate(), Err(ModelError::DeadlineBeforeReady(0))));
    }

    proptest! {
        #[test]
        fn manhattan_is_a_metric(ax in 0u16..64, ay in 0u16..64, bx in 0u16..64, by in 0u16..64, cx in 0u16..64, cy in 0u16..64) {
            let (a, b, c) = (n(ax, ay), n(bx, by), n(cx, cy));
            prop_assert_eq!(manhattan(a, b), manhattan(b, a));
            prop_assert!(manhattan(a, c) <= manhattan(a, b) + manhattan(b, c));
            prop_assert_eq!(manhattan(a, b) == 0, a == b);
        }

        #[test]
        fn flit_count_is_tight_ceiling(l in 1u64..1_000_000, f in 1u32..4096) {
            let k = flit_count(l, f);
            prop_assert!(k * f as u64 >= l);
            prop_assert!((k - 1) * (f as u64) < l);
        }
    }
}
