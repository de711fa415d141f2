//! Router configuration and chunk framing.
//!
//! A head flit carries a source-route field of 3-bit port codes ending in
//! NOP. Routers pop one code per hop; on NOP they switch to table mode and
//! look the flow's hardware id up in a table of at most three one-hot
//! output masks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::model::{Direction, Flit, FlitRole, FlowId, LocalPort, MeshTopology, NodeId, PatternKind, TrafficFlow};
use crate::routing::{RoutePlan, SpanningTree};
use crate::schedule::{Leg, LegKind};

/// Width of the hardware flow id carried in headers and table keys.
pub const FLOW_ID_BITS: u32 = 2;
/// Width of the chunk length field, in flits.
pub const LENGTH_FIELD_BITS: u32 = 16;
pub const MAX_TABLE_ENTRIES: usize = 3;

pub const MASK_EAST: u8 = 0b00001;
pub const MASK_SOUTH: u8 = 0b00010;
pub const MASK_WEST: u8 = 0b00100;
pub const MASK_NORTH: u8 = 0b01000;
pub const MASK_OUTPUT: u8 = 0b10000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortCode {
    Nop = 0b000,
    East = 0b001,
    South = 0b010,
    West = 0b011,
    North = 0b100,
    Output = 0b101,
}

impl PortCode {
    pub fn from_direction(d: Direction) -> Self {
        match d {
            Direction::East => PortCode::East,
            Direction::South => PortCode::South,
            Direction::West => PortCode::West,
            Direction::North => PortCode::North,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            PortCode::East => Some(Direction::East),
            PortCode::South => Some(Direction::South),
            PortCode::West => Some(Direction::West),
            PortCode::North => Some(Direction::North),
            _ => None,
        }
    }

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(b: u8) -> Result<Self, ConfigError> {
        Ok(match b {
            0b000 => PortCode::Nop,
            0b001 => PortCode::East,
            0b010 => PortCode::South,
            0b011 => PortCode::West,
            0b100 => PortCode::North,
            0b101 => PortCode::Output,
            other => return Err(ConfigError::MalformedHeader(other)),
        })
    }
}

pub fn direction_mask(d: Direction) -> u8 {
    match d {
        Direction::East => MASK_EAST,
        Direction::South => MASK_SOUTH,
        Direction::West => MASK_WEST,
        Direction::North => MASK_NORTH,
    }
}

/// MSB-first bit string; displayed in 3-bit groups.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn push_code(&mut self, c: PortCode) {
        let b = c.bits();
        self.0.extend([(b >> 2) & 1 == 1, (b >> 1) & 1 == 1, b & 1 == 1]);
    }

    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, chunk) in self.0.chunks(3).enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            for b in chunk {
                f.write_str(if *b { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

/// How a source-routed path ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteEnd {
    /// Hand over to the routing tables at the last node.
    Table,
    /// Eject at the last node.
    Output,
}

/// Direction codes for every hop, an optional Output, then NOP.
pub fn encode_source_route(path: &[NodeId], end: RouteEnd) -> Result<BitString, ModelError> {
    let mut out = BitString::default();
    for w in path.windows(2) {
        let d = Direction::between(w[0], w[1]).ok_or(ModelError::NonAdjacentHop { from: w[0], to: w[1] })?;
        out.push_code(PortCode::from_direction(d));
    }
    if end == RouteEnd::Output {
        out.push_code(PortCode::Output);
    }
    out.push_code(PortCode::Nop);
    Ok(out)
}

/// Pop the leading 3-bit code.
pub fn decode_next_port(field: &BitString) -> Result<(PortCode, BitString), ConfigError> {
    if field.len() < 3 {
        return Err(ConfigError::EmptyField);
    }
    let b = field.0[..3].iter().fold(0u8, |acc, &bit| (acc << 1) | bit as u8);
    let code = PortCode::from_bits(b)?;
    Ok((code, BitString(field.0[3..].to_vec())))
}

/// Every code in the field up to and including the first NOP.
pub fn decode_all(field: &BitString) -> Result<Vec<PortCode>, ConfigError> {
    let mut out = Vec::new();
    let mut rest = field.clone();
    loop {
        let (c, r) = decode_next_port(&rest)?;
        out.push(c);
        if c == PortCode::Nop {
            return Ok(out);
        }
        rest = r;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoutingTableEntry {
    pub flow_id: u8,
    pub mask: u8,
}

impl fmt::Display for RoutingTableEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0w$b}:{:05b}", self.flow_id, self.mask, w = FLOW_ID_BITS as usize)
    }
}

/// Per-node output masks for a broadcast tree: children plus Output at terminals.
pub fn build_routing_tables(tree: &SpanningTree, flow_id: u8) -> BTreeMap<NodeId, RoutingTableEntry> {
    tree.nodes()
        .map(|node| {
            let mut mask = tree.children[&node].iter().fold(0u8, |m, d| m | direction_mask(*d));
            if tree.is_terminal(node) {
                mask |= MASK_OUTPUT;
            }
            (node, RoutingTableEntry { flow_id, mask })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkHeader {
    pub flow_id: u8,
    pub route: BitString,
    /// Flits following the head, or 0 for a single head-tail flit.
    pub length_flits: u32,
}

impl ChunkHeader {
    pub fn bits(&self) -> u32 {
        header_bits(self.route.len())
    }
}

pub fn header_bits(route_bits: usize) -> u32 {
    FLOW_ID_BITS + route_bits as u32 + LENGTH_FIELD_BITS
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Framing {
    /// One header for the whole chunk.
    #[default]
    Chunk,
    /// Conventional packets of `payload_flits` data flits, each with its own header.
    Packet { payload_flits: u32 },
}

/// Flits on the wire for a framed unit of `bits` payload: one head-tail flit
/// when payload and header share a flit, otherwise a head plus payload flits.
fn unit_flits(bits: u64, header: u32, wire: u32) -> u64 {
    if bits + header as u64 <= wire as u64 {
        1
    } else {
        1 + bits.div_ceil(wire as u64)
    }
}

/// Total on-wire flits, headers included.
pub fn framed_flit_count(payload_bits: u64, header: u32, wire: u32, framing: Framing) -> u64 {
    match framing {
        Framing::Chunk => unit_flits(payload_bits, header, wire),
        Framing::Packet { payload_flits } => {
            let per = payload_flits as u64 * wire as u64;
            let full = payload_bits / per;
            let rest = payload_bits % per;
            full * unit_flits(per, header, wire) + if rest > 0 { unit_flits(rest, header, wire) } else { 0 }
        }
    }
}

/// Number of headers a payload of `payload_flits` data flits carries.
pub fn header_count(payload_flits: u64, framing: Framing) -> u64 {
    match framing {
        Framing::Chunk => 1,
        Framing::Packet { payload_flits: p } => payload_flits.div_ceil(p as u64).max(1),
    }
}

/// Split a flow's payload into one chunk behind a single header.
pub fn serialize_chunk(
    flow: FlowId,
    volume: u64,
    header: &ChunkHeader,
    wire_width: u32,
) -> Result<Vec<Flit>, ConfigError> {
    let hb = header.bits();
    if hb > wire_width {
        return Err(ConfigError::HeaderOverflow { flow, bits: hb, wire_width });
    }
    if volume + hb as u64 <= wire_width as u64 {
        return Ok(vec![Flit { flow_id: flow, seq: 0, role: FlitRole::HeadTail, payload_bits: volume as u32 }]);
    }
    let body = volume.div_ceil(wire_width as u64);
    let mut out = vec![Flit { flow_id: flow, seq: 0, role: FlitRole::Head, payload_bits: 0 }];
    for i in 0..body {
        let bits = if i + 1 == body { volume - i * wire_width as u64 } else { wire_width as u64 };
        out.push(Flit {
            flow_id: flow,
            seq: i as u32 + 1,
            role: if i + 1 == body { FlitRole::Tail } else { FlitRole::Body },
            payload_bits: bits as u32,
        });
    }
    Ok(out)
}

fn route_end(kind: LegKind) -> RouteEnd {
    match kind {
        LegKind::Broadcast => RouteEnd::Table,
        _ => RouteEnd::Output,
    }
}

/// Lower routed flows into injectable legs with framed flit counts.
/// Legs of one flow are contiguous and follow `flows` order.
pub fn lower_legs(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    plans: &[RoutePlan],
    framing: Framing,
) -> Result<Vec<Leg>, ConfigError> {
    let wire = mesh.wire_width;
    let mut legs: Vec<Leg> = Vec::new();
    for (flow, plan) in flows.iter().zip(plans) {
        let push = |legs: &mut Vec<Leg>,
                    kind: LegKind,
                    path: Vec<NodeId>,
                    tree: SpanningTree,
                    ports: (LocalPort, LocalPort),
                    deps: Vec<usize>|
         -> Result<usize, ConfigError> {
            let route = encode_source_route(&path, route_end(kind))?;
            let hb = header_bits(route.len());
            if hb > wire {
                return Err(ConfigError::HeaderOverflow { flow: flow.id, bits: hb, wire_width: wire });
            }
            legs.push(Leg {
                flow_id: flow.id,
                kind,
                path,
                tree,
                src_port: ports.0,
                dst_port: ports.1,
                payload_bits: flow.volume,
                flits: framed_flit_count(flow.volume, hb, wire, framing),
                depends_on: deps,
            });
            Ok(legs.len() - 1)
        };
        let self_delivery = |path: &[NodeId], ports: (LocalPort, LocalPort)| path.len() == 1 && ports.0 == ports.1;
        match (plan.kind, plan.dual_phase) {
            (PatternKind::Multicast, true) => {
                push(
                    &mut legs,
                    LegKind::Broadcast,
                    plan.phase1_path.clone(),
                    plan.phase2_tree.clone(),
                    (flow.src_port, flow.dst_port),
                    vec![],
                )?;
            }
            (PatternKind::Reduce, true) => {
                let mut gathers = Vec::new();
                for &s in &plan.phase2_tree.terminals {
                    if s == plan.hub {
                        continue;
                    }
                    let path = plan.gather_path(s);
                    gathers.push(push(
                        &mut legs,
                        LegKind::Gather,
                        path,
                        SpanningTree::singleton(plan.hub),
                        (flow.src_port, LocalPort::Tile),
                        vec![],
                    )?);
                }
                let ports = (LocalPort::Tile, flow.dst_port);
                if !self_delivery(&plan.phase1_path, ports) {
                    let dst = *plan.phase1_path.last().unwrap();
                    push(
                        &mut legs,
                        LegKind::Forward,
                        plan.phase1_path.clone(),
                        SpanningTree::singleton(dst),
                        ports,
                        gathers,
                    )?;
                }
            }
            _ => {
                let paths: Vec<Vec<NodeId>> = if plan.unicast_paths.is_empty() {
                    vec![plan.phase1_path.clone()]
                } else {
                    plan.unicast_paths.clone()
                };
                let ports = (flow.src_port, flow.dst_port);
                for p in paths {
                    if self_delivery(&p, ports) {
                        continue;
                    }
                    let dst = *p.last().unwrap();
                    push(&mut legs, LegKind::Unicast, p, SpanningTree::singleton(dst), ports, vec![])?;
                }
            }
        }
    }
    Ok(legs)
}

/// Table contents for one broadcast tree, used to spot identical patterns.
type PatternKey = Vec<(NodeId, u8)>;

/// Everything uploaded to the fabric before a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceleratorConfig {
    pub wire_width: u32,
    pub framing: Framing,
    /// Per router, at most [`MAX_TABLE_ENTRIES`] entries.
    #[serde(with = "crate::model::map_as_pairs")]
    pub tables: BTreeMap<NodeId, Vec<RoutingTableEntry>>,
    /// One header per leg, indexed like the legs.
    pub headers: Vec<ChunkHeader>,
}

/// Build headers and routing tables for a set of legs.
///
/// Broadcast legs with identical trees share one table pattern. Patterns that
/// meet at a router get distinct hardware ids.
pub fn emit_config(mesh: &MeshTopology, legs: &[Leg], framing: Framing) -> Result<AcceleratorConfig, ConfigError> {
    let mut patterns: BTreeMap<PatternKey, Vec<usize>> = BTreeMap::new();
    for (i, leg) in legs.iter().enumerate() {
        if leg.kind == LegKind::Broadcast {
            let key: PatternKey = build_routing_tables(&leg.tree, 0).into_iter().map(|(n, e)| (n, e.mask)).collect();
            patterns.entry(key).or_default().push(i);
        }
    }
    let keys: Vec<&PatternKey> = patterns.keys().collect();
    let mut at_router: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (p, key) in keys.iter().enumerate() {
        for (n, _) in key.iter() {
            at_router.entry(*n).or_default().push(p);
        }
    }
    for (n, ps) in &at_router {
        if ps.len() > MAX_TABLE_ENTRIES {
            return Err(ConfigError::TableOverflow { node: *n, entries: ps.len(), limit: MAX_TABLE_ENTRIES });
        }
    }
    let id_space = 1u8 << FLOW_ID_BITS;
    let mut ids: Vec<u8> = Vec::with_capacity(keys.len());
    for (p, key) in keys.iter().enumerate() {
        let taken: BTreeSet<u8> =
            key.iter().flat_map(|(n, _)| at_router[n].iter()).filter(|&&q| q < p).map(|&q| ids[q]).collect();
        let id = (0..id_space).find(|i| !taken.contains(i)).ok_or(ConfigError::FlowIdsExhausted { node: key[0].0 })?;
        ids.push(id);
    }

    let mut tables: BTreeMap<NodeId, Vec<RoutingTableEntry>> = BTreeMap::new();
    let mut leg_id: Vec<u8> = vec![0; legs.len()];
    for (p, (key, members)) in patterns.iter().enumerate() {
        for (n, mask) in key {
            tables.entry(*n).or_default().push(RoutingTableEntry { flow_id: ids[p], mask: *mask });
        }
        for &m in members {
            leg_id[m] = ids[p];
        }
    }
    for entries in tables.values_mut() {
        entries.sort();
    }

    let mut headers = Vec::with_capacity(legs.len());
    for (i, leg) in legs.iter().enumerate() {
        let route = encode_source_route(&leg.path, route_end(leg.kind))?;
        let hb = header_bits(route.len());
        if hb > mesh.wire_width {
            return Err(ConfigError::HeaderOverflow { flow: leg.flow_id, bits: hb, wire_width: mesh.wire_width });
        }
        let length = leg.flits - 1;
        if length >= 1 << LENGTH_FIELD_BITS {
            return Err(ConfigError::ChunkTooLong { flow: leg.flow_id, flits: leg.flits });
        }
        headers.push(ChunkHeader { flow_id: leg_id[i], route, length_flits: length as u32 });
    }
    Ok(AcceleratorConfig { wire_width: mesh.wire_width, framing, tables, headers })
}

impl AcceleratorConfig {
    /// Mask a router applies to a flow in table mode.
    pub fn lookup(&self, node: NodeId, flow_id: u8) -> Option<u8> {
        self.tables.get(&node)?.iter().find(|e| e.flow_id == flow_id).map(|e| e.mask)
    }

    /// Bit-exact text dump: one line per router table, then one per leg header.
    pub fn dump(&self, legs: &[Leg]) -> String {
        let mut s = String::new();
        s.push_str(&format!("wire_width {}\n", self.wire_width));
        match self.framing {
            Framing::Chunk => s.push_str("framing chunk\n"),
            Framing::Packet { payload_flits } => s.push_str(&format!("framing packet {payload_flits}\n")),
        }
        for (n, entries) in &self.tables {
            let e: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
            s.push_str(&format!("table {} {}\n", n, e.join(" ")));
        }
        for (i, (h, leg)) in self.headers.iter().zip(legs).enumerate() {
            s.push_str(&format!(
                "header {i} flow {} id {:0w$b} len {} route {}\n",
                leg.flow_id,
                h.flow_id,
                h.length_flits,
                h.route,
                w = FLOW_ID_BITS as usize
            ));
        }
        s
    }
}
