//! Conventional virtual-channel mesh: input-buffered routers with credit-based
//! flow control, round-robin VC allocation, one escape VC restricted to X-Y
//! routing, and a separable switch allocator.
//!
//! Timing: a flit crossing a crossbar at cycle `c` lands in the downstream
//! input buffer at `c + wire_cycles` and may cross that router's crossbar from
//! `c + wire_cycles + router_cycles`. Local injection enters the source
//! crossbar directly. A credit returns to the upstream router `wire_cycles`
//! after the flit leaves the buffer.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FlowTiming, SimResult};
use crate::error::SimError;
use crate::model::{ChannelId, Direction, FlowId, LocalPort, MeshTopology, NodeId, PatternKind, TrafficFlow};
use crate::routing::{baseline_path, xy_route, yx_route, BaselineRouting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Virtual channels per input port; the last one is the escape channel.
    pub vcs: u32,
    /// Flits of buffering per virtual channel.
    pub buffer_depth: u32,
    pub router_cycles: u32,
    pub wire_cycles: u32,
    pub routing: BaselineRouting,
    /// Data flits per packet; each packet adds one header flit.
    pub packet_payload_flits: u32,
    /// Cycles without any flit movement before declaring deadlock.
    pub deadlock_budget: u64,
    pub mc_bits_per_cycle: Option<u64>,
    pub seed: u64,
    /// Record the set of credit-starved channels per window of this many cycles.
    pub saturation_window: Option<u64>,
    pub trace: bool,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            vcs: 8,
            buffer_depth: 8,
            router_cycles: 4,
            wire_cycles: 1,
            routing: BaselineRouting::Dor,
            packet_payload_flits: 8,
            deadlock_budget: 100_000,
            mc_bits_per_cycle: Some(1200),
            seed: 0,
            saturation_window: None,
            trace: false,
        }
    }
}

/// Buffer and credit extremes seen during a baseline run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub max_vc_occupancy: u32,
    pub min_credit: u32,
    pub max_credit: u32,
    /// Channels that had a flit waiting on zero credits, per window.
    pub blocked_windows: Vec<BTreeSet<ChannelId>>,
}

/// One source-destination pair of a lowered flow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnicastMessage {
    pub flow_id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub src_port: LocalPort,
    pub dst_port: LocalPort,
    pub ready: u64,
    pub payload_bits: u64,
}

/// Replace every collective by one unicast per participant pair.
/// Pairs that would deliver to the very port they start from are dropped.
pub fn lower_to_unicasts(flows: &[TrafficFlow]) -> Vec<UnicastMessage> {
    let mut out = Vec::new();
    for f in flows {
        let pairs: Vec<(NodeId, NodeId)> = match f.kind {
            PatternKind::Reduce => f.sources.iter().map(|&s| (s, f.destinations[0])).collect(),
            _ => f.destinations.iter().map(|&d| (f.sources[0], d)).collect(),
        };
        for (s, d) in pairs {
            if s == d && f.src_port == f.dst_port {
                continue;
            }
            out.push(UnicastMessage {
                flow_id: f.id,
                src: s,
                dst: d,
                src_port: f.src_port,
                dst_port: f.dst_port,
                ready: f.ready_time,
                payload_bits: f.volume,
            });
        }
    }
    out
}

/// Flits of each packet a message is cut into, header flit included.
pub fn packetize(payload_bits: u64, wire_width: u32, payload_flits: u32) -> Vec<u32> {
    let data = payload_bits.div_ceil(wire_width as u64).max(1);
    let per = payload_flits.max(1) as u64;
    let mut out = vec![per as u32 + 1; (data / per) as usize];
    if !data.is_multiple_of(per) {
        out.push((data % per) as u32 + 1);
    }
    out
}

const PORTS: usize = 6;

fn local_index(p: LocalPort) -> usize {
    match p {
        LocalPort::Tile => 4,
        LocalPort::Mc => 5,
    }
}

fn local_of(i: usize) -> LocalPort {
    if i == 4 {
        LocalPort::Tile
    } else {
        LocalPort::Mc
    }
}

fn dor_direction(at: NodeId, dst: NodeId) -> Direction {
    if dst.x > at.x {
        Direction::East
    } else if dst.x < at.x {
        Direction::West
    } else if dst.y > at.y {
        Direction::South
    } else {
        Direction::North
    }
}

struct Packet {
    msg: usize,
    flits: u32,
    /// Static route from the injecting router; empty for adaptive routing.
    route: Vec<NodeId>,
    hop: usize,
    escaped: bool,
    /// Route depends on the cycle the head is first routed; filled in then.
    deferred: bool,
}

#[derive(Clone, Copy)]
struct BufFlit {
    packet: u32,
    seq: u32,
    ready_at: u64,
}

#[derive(Default)]
struct InVc {
    q: VecDeque<BufFlit>,
    /// (output port, output VC) held by the packet at the front.
    alloc: Option<(usize, usize)>,
}

#[derive(Default)]
struct Ni {
    packets: VecDeque<u32>,
    next_seq: u32,
    alloc: Option<(usize, usize)>,
    bucket: u64,
    bucket_at: u64,
}

struct Router {
    node: NodeId,
    inputs: [Vec<InVc>; 4],
    ni: [Ni; 2],
    credits: [Vec<u32>; 4],
    owned: [Vec<bool>; 4],
    va_rr: [usize; 4],
    sa_in_rr: [usize; PORTS],
    sa_out_rr: [usize; PORTS],
    load: usize,
}

#[derive(Clone, Copy, Default)]
struct MsgState {
    first_inject: Option<u64>,
    first_eject: Option<u64>,
    last_eject: u64,
    injected: u64,
    ejected: u64,
}

struct Sim<'a> {
    mesh: &'a MeshTopology,
    p: &'a BaselineParams,
    msgs: &'a [UnicastMessage],
    packets: Vec<Packet>,
    routers: Vec<Router>,
    state: Vec<MsgState>,
    stats: BaselineStats,
    result: SimResult,
}

impl<'a> Sim<'a> {
    fn front(&self, r: usize, i: usize, v: usize) -> Option<BufFlit> {
        let router = &self.routers[r];
        if i < 4 {
            router.inputs[i][v].q.front().copied()
        } else {
            let ni = &router.ni[i - 4];
            ni.packets.front().map(|&pk| BufFlit {
                packet: pk,
                seq: ni.next_seq,
                ready_at: self.msgs[self.packets[pk as usize].msg].ready,
            })
        }
    }

    fn alloc(&self, r: usize, i: usize, v: usize) -> Option<(usize, usize)> {
        if i < 4 {
            self.routers[r].inputs[i][v].alloc
        } else {
            self.routers[r].ni[i - 4].alloc
        }
    }

    fn set_alloc(&mut self, r: usize, i: usize, v: usize, a: Option<(usize, usize)>) {
        if i < 4 {
            self.routers[r].inputs[i][v].alloc = a;
        } else {
            self.routers[r].ni[i - 4].alloc = a;
        }
    }

    fn vcs_of(&self, i: usize) -> usize {
        if i < 4 {
            self.p.vcs as usize
        } else {
            1
        }
    }

    fn mc_cap(&self) -> Option<u64> {
        self.p.mc_bits_per_cycle.filter(|&c| c < self.mesh.wire_width as u64)
    }

    /// Bits of injection budget an MC interface holds at `cycle`.
    fn bucket(&self, r: usize, cycle: u64) -> u64 {
        let ni = &self.routers[r].ni[1];
        let cap = self.mc_cap().unwrap_or(u64::MAX / 4);
        let f = self.mesh.wire_width as u64;
        f.min(ni.bucket.saturating_add((cycle - ni.bucket_at).saturating_mul(cap)))
    }

    fn paced_ok(&self, r: usize, i: usize, cycle: u64) -> bool {
        i != 5 || self.mc_cap().is_none() || self.bucket(r, cycle) >= self.mesh.wire_width as u64
    }

    /// Route computation and VC allocation for a head flit. Returns the grant.
    fn allocate(&mut self, r: usize, pk: usize, cycle: u64) -> Option<(usize, usize)> {
        let here = self.routers[r].node;
        if self.packets[pk].deferred {
            let p = &mut self.packets[pk];
            p.deferred = false;
            let dst = self.msgs[p.msg].dst;
            p.route = if cycle.is_multiple_of(2) { xy_route(here, dst) } else { yx_route(here, dst) };
        }
        let msg = &self.msgs[self.packets[pk].msg];
        let dst = msg.dst;
        if here == dst {
            return Some((local_index(msg.dst_port), 0));
        }
        let vcs = self.p.vcs as usize;
        let escape = vcs - 1;
        let dor = dor_direction(here, dst);
        if !self.packets[pk].escaped && vcs > 1 {
            let want = if self.packets[pk].route.is_empty() {
                self.adaptive_direction(r, dst)
            } else {
                let p = &self.packets[pk];
                Direction::between(p.route[p.hop], p.route[p.hop + 1]).expect("adjacent hops")
            };
            let d = want.index();
            let router = &mut self.routers[r];
            for k in 0..escape {
                let vc = (router.va_rr[d] + k) % escape;
                if !router.owned[d][vc] {
                    router.owned[d][vc] = true;
                    router.va_rr[d] = (vc + 1) % escape;
                    return Some((d, vc));
                }
            }
        }
        let d = dor.index();
        if self.routers[r].owned[d][escape] {
            return None;
        }
        self.routers[r].owned[d][escape] = true;
        let p = &mut self.packets[pk];
        if !p.escaped {
            p.escaped = true;
            p.route = xy_route(here, dst);
            p.hop = 0;
        }
        Some((d, escape))
    }

    /// Minimal direction whose downstream port has the most free buffer; X wins ties.
    fn adaptive_direction(&self, r: usize, dst: NodeId) -> Direction {
        let here = self.routers[r].node;
        let mut options = Vec::with_capacity(2);
        if dst.x != here.x {
            options.push(if dst.x > here.x { Direction::East } else { Direction::West });
        }
        if dst.y != here.y {
            options.push(if dst.y > here.y { Direction::South } else { Direction::North });
        }
        let normal = (self.p.vcs as usize - 1).max(1);
        let free = |d: Direction| -> u32 { self.routers[r].credits[d.index()][..normal].iter().sum() };
        let mut best = options[0];
        for &d in &options[1..] {
            if free(d) > free(best) {
                best = d;
            }
        }
        best
    }
}

/// Simulate a set of flows on the baseline network. Collectives are lowered
/// to unicasts and every message is cut into packets.
pub fn simulate_baseline(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    params: &BaselineParams,
) -> Result<SimResult, SimError> {
    let msgs = lower_to_unicasts(flows);
    let (mut result, stats) = simulate_messages(mesh, &msgs, params)?;
    finish_flows(&mut result, flows, &msgs, &stats.1);
    result.baseline = Some(stats.0);
    Ok(result)
}

type MsgTimes = Vec<(Option<u64>, Option<u64>, u64, u64, u64)>;

fn finish_flows(result: &mut SimResult, flows: &[TrafficFlow], msgs: &[UnicastMessage], times: &MsgTimes) {
    let mut by_flow: BTreeMap<FlowId, Vec<usize>> = BTreeMap::new();
    for (i, m) in msgs.iter().enumerate() {
        by_flow.entry(m.flow_id).or_default().push(i);
    }
    for f in flows {
        let mut t = FlowTiming {
            flow_id: f.id,
            injection: f.ready_time,
            head_arrival: f.ready_time,
            tail_arrival: f.ready_time,
            ..FlowTiming::default()
        };
        if let Some(ids) = by_flow.get(&f.id) {
            t.injection = ids.iter().filter_map(|&i| times[i].0).min().unwrap_or(f.ready_time);
            t.head_arrival = ids.iter().filter_map(|&i| times[i].1).min().unwrap_or(t.injection);
            for &i in ids {
                let (_, _, last, injected, ejected) = times[i];
                t.tail_arrival = t.tail_arrival.max(last + 1);
                t.flits_injected += injected;
                t.flits_ejected += ejected;
                let e = t.dest_arrival.entry(msgs[i].dst).or_insert(0);
                *e = (*e).max(last + 1);
            }
        }
        for &d in &f.destinations {
            t.dest_arrival.entry(d).or_insert(t.tail_arrival);
        }
        result.makespan = result.makespan.max(t.tail_arrival);
        result.flows.insert(f.id, t);
    }
}

/// Run the network on already-lowered messages. Returns the raw result and,
/// per message, (first injection, first head eject, last eject, flits in, flits out).
fn simulate_messages(
    mesh: &MeshTopology,
    msgs: &[UnicastMessage],
    params: &BaselineParams,
) -> Result<(SimResult, (BaselineStats, MsgTimes)), SimError> {
    assert!(params.vcs >= 1 && params.buffer_depth >= 1);
    let vcs = params.vcs as usize;
    let depth = params.buffer_depth;
    let wire = mesh.wire_width;
    let mut routers: Vec<Router> = mesh
        .nodes()
        .map(|node| Router {
            node,
            inputs: std::array::from_fn(|_| (0..vcs).map(|_| InVc::default()).collect()),
            ni: [Ni { bucket: wire as u64, ..Ni::default() }, Ni { bucket: wire as u64, ..Ni::default() }],
            credits: std::array::from_fn(|_| vec![depth; vcs]),
            owned: std::array::from_fn(|_| vec![false; vcs]),
            va_rr: [0; 4],
            sa_in_rr: [0; PORTS],
            sa_out_rr: [0; PORTS],
            load: 0,
        })
        .collect();

    // Interfaces drain their messages in ready order.
    let mut order: Vec<usize> = (0..msgs.len()).collect();
    order.sort_by_key(|&i| (msgs[i].ready, msgs[i].flow_id, i));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut packets = Vec::new();
    let mut total_flits = 0u64;
    for &mi in &order {
        let m = &msgs[mi];
        let r = mesh.index(m.src);
        for flits in packetize(m.payload_bits, wire, params.packet_payload_flits) {
            let escaped = vcs == 1;
            let deferred = !escaped && params.routing == BaselineRouting::Xyyx;
            let route = if escaped {
                xy_route(m.src, m.dst)
            } else if deferred {
                Vec::new()
            } else {
                baseline_path(params.routing, m.src, m.dst, m.ready, &mut rng).unwrap_or_default()
            };
            routers[r].ni[local_index(m.src_port) - 4].packets.push_back(packets.len() as u32);
            routers[r].load += flits as usize;
            total_flits += flits as u64;
            packets.push(Packet { msg: mi, flits, route, hop: 0, escaped, deferred });
        }
    }

    let mut sim = Sim {
        mesh,
        p: params,
        msgs,
        packets,
        routers,
        state: vec![MsgState::default(); msgs.len()],
        stats: BaselineStats { min_credit: depth, max_credit: depth, ..BaselineStats::default() },
        result: SimResult::default(),
    };

    let mut active: BTreeSet<usize> = (0..sim.routers.len()).filter(|&r| sim.routers[r].load > 0).collect();
    let mut credits_due: BTreeMap<u64, Vec<(usize, usize, usize)>> = BTreeMap::new();
    let mut ejected_total = 0u64;
    let mut cycle = active
        .iter()
        .flat_map(|&r| [sim.front(r, 4, 0), sim.front(r, 5, 0)])
        .flatten()
        .map(|f| f.ready_at)
        .min()
        .unwrap_or(0);
    for r in &active {
        for ni in &mut sim.routers[*r].ni {
            ni.bucket_at = cycle;
        }
    }
    let mut last_move = cycle;

    while ejected_total < total_flits {
        while let Some(entry) = credits_due.first_entry() {
            if *entry.key() > cycle {
                break;
            }
            for (r, d, vc) in entry.remove() {
                let c = &mut sim.routers[r].credits[d][vc];
                *c += 1;
                sim.stats.max_credit = sim.stats.max_credit.max(*c);
                debug_assert!(*c <= depth);
            }
        }

        let mut deliveries: Vec<(usize, usize, usize, BufFlit)> = Vec::new();
        let mut moved = false;
        let mut blocked_ready = 0u64;
        let mut waiting = false;
        let mut next_event = u64::MAX;
        let window = params.saturation_window.map(|w| (cycle / w) as usize);

        for &r in active.iter() {
            // Route computation and VC allocation.
            let rot = (cycle % PORTS as u64) as usize;
            for k in 0..PORTS {
                let i = (rot + k) % PORTS;
                for v in 0..sim.vcs_of(i) {
                    if let Some(f) = sim.front(r, i, v) {
                        if f.seq == 0 && f.ready_at <= cycle && sim.alloc(r, i, v).is_none() {
                            let grant = sim.allocate(r, f.packet as usize, cycle);
                            sim.set_alloc(r, i, v, grant);
                        }
                    }
                }
            }

            // Switch allocation: each input offers one VC, each output takes one input.
            let mut requests: [Option<(usize, usize)>; PORTS] = [None; PORTS];
            #[allow(clippy::needless_range_loop)]
            for i in 0..PORTS {
                let nv = sim.vcs_of(i);
                for k in 0..nv {
                    let v = (sim.routers[r].sa_in_rr[i] + k) % nv;
                    let Some(f) = sim.front(r, i, v) else { continue };
                    if f.ready_at > cycle {
                        next_event = next_event.min(f.ready_at);
                        continue;
                    }
                    let Some((o, ov)) = sim.alloc(r, i, v) else { continue };
                    let has_credit = o >= 4 || sim.routers[r].credits[o][ov] > 0;
                    if has_credit && sim.paced_ok(r, i, cycle) {
                        requests[i] = Some((v, o));
                        break;
                    }
                }
            }
            let mut winners: Vec<(usize, usize, usize)> = Vec::new();
            for o in 0..PORTS {
                let start = sim.routers[r].sa_out_rr[o];
                for k in 0..PORTS {
                    let i = (start + k) % PORTS;
                    if let Some((v, ro)) = requests[i] {
                        if ro == o {
                            winners.push((i, v, o));
                            sim.routers[r].sa_out_rr[o] = (i + 1) % PORTS;
                            sim.routers[r].sa_in_rr[i] = (v + 1) % sim.vcs_of(i);
                            break;
                        }
                    }
                }
            }

            // Stall accounting over network buffers, before anything moves.
            for i in 0..4 {
                for v in 0..vcs {
                    let Some(f) = sim.front(r, i, v) else { continue };
                    if f.ready_at > cycle || winners.iter().any(|w| w.0 == i && w.1 == v) {
                        continue;
                    }
                    blocked_ready += 1;
                    if let (Some(w), Some((o, ov))) = (window, sim.alloc(r, i, v)) {
                        if o < 4 && sim.routers[r].credits[o][ov] == 0 {
                            let node = sim.routers[r].node;
                            let ch = ChannelId::link(node, node.step(Direction::ALL[o], mesh).unwrap());
                            if sim.stats.blocked_windows.len() <= w {
                                sim.stats.blocked_windows.resize(w + 1, BTreeSet::new());
                            }
                            sim.stats.blocked_windows[w].insert(ch);
                        }
                    }
                }
            }
            for i in 4..PORTS {
                let Some(f) = sim.front(r, i, 0) else { continue };
                if f.ready_at > cycle {
                    continue;
                }
                if winners.iter().all(|w| w.0 != i) {
                    if i == 5 && !sim.paced_ok(r, i, cycle) {
                        let ni = &sim.routers[r].ni[1];
                        let cap = sim.mc_cap().unwrap();
                        next_event = next_event.min(ni.bucket_at + (wire as u64 - ni.bucket).div_ceil(cap));
                    } else {
                        waiting = true;
                    }
                }
            }

            for (i, v, o) in winners {
                moved = true;
                let node = sim.routers[r].node;
                let f = if i < 4 {
                    let f = sim.routers[r].inputs[i][v].q.pop_front().unwrap();
                    let up = node.step(Direction::ALL[i], mesh).expect("input has a neighbour");
                    credits_due.entry(cycle + params.wire_cycles as u64).or_default().push((
                        mesh.index(up),
                        Direction::ALL[i].opposite().index(),
                        v,
                    ));
                    f
                } else {
                    let f = sim.front(r, i, 0).unwrap();
                    if i == 5 && sim.mc_cap().is_some() {
                        let b = sim.bucket(r, cycle);
                        let ni = &mut sim.routers[r].ni[1];
                        ni.bucket = b - wire as u64;
                        ni.bucket_at = cycle;
                    }
                    let st = &mut sim.state[sim.packets[f.packet as usize].msg];
                    st.first_inject.get_or_insert(cycle);
                    st.injected += 1;
                    *sim.result.channel_busy.entry(ChannelId::Inject { node, port: local_of(i) }).or_insert(0) += 1;
                    let ni = &mut sim.routers[r].ni[i - 4];
                    ni.next_seq += 1;
                    f
                };
                let pk = f.packet as usize;
                let tail = f.seq + 1 == sim.packets[pk].flits;
                if i >= 4 && tail {
                    let ni = &mut sim.routers[r].ni[i - 4];
                    ni.packets.pop_front();
                    ni.next_seq = 0;
                }
                if params.trace {
                    sim.result.trace.push(format!("{cycle} packet {pk} flit {} {node} out {o}", f.seq));
                }
                if o < 4 {
                    let d = Direction::ALL[o];
                    let next = node.step(d, mesh).expect("routed inside the mesh");
                    let ov = sim.alloc(r, i, v).expect("granted").1;
                    let credit = &mut sim.routers[r].credits[o][ov];
                    *credit -= 1;
                    sim.stats.min_credit = sim.stats.min_credit.min(*credit);
                    if f.seq == 0 {
                        sim.packets[pk].hop += 1;
                    }
                    *sim.result.channel_busy.entry(ChannelId::link(node, next)).or_insert(0) += 1;
                    deliveries.push((
                        mesh.index(next),
                        d.opposite().index(),
                        ov,
                        BufFlit {
                            packet: f.packet,
                            seq: f.seq,
                            ready_at: cycle + (params.wire_cycles + params.router_cycles) as u64,
                        },
                    ));
                    if tail {
                        sim.routers[r].owned[o][ov] = false;
                    }
                } else {
                    let st = &mut sim.state[sim.packets[pk].msg];
                    if f.seq == 0 {
                        st.first_eject.get_or_insert(cycle);
                    }
                    st.last_eject = st.last_eject.max(cycle);
                    st.ejected += 1;
                    ejected_total += 1;
                    *sim.result.channel_busy.entry(ChannelId::Eject { node, port: local_of(o) }).or_insert(0) += 1;
                }
                sim.routers[r].load -= 1;
                if tail {
                    sim.set_alloc(r, i, v, None);
                }
            }
        }

        for (r, i, v, f) in deliveries {
            let q = &mut sim.routers[r].inputs[i][v].q;
            q.push_back(f);
            sim.stats.max_vc_occupancy = sim.stats.max_vc_occupancy.max(q.len() as u32);
            sim.routers[r].load += 1;
            active.insert(r);
        }
        active.retain(|&r| sim.routers[r].load > 0);

        sim.result.blocked_flit_cycles += blocked_ready;
        if moved {
            last_move = cycle;
        } else if cycle - last_move > params.deadlock_budget && ejected_total < total_flits {
            return Err(SimError::DeadlockDetected { cycle, budget: params.deadlock_budget });
        }
        let step = if moved || waiting || blocked_ready > 0 {
            cycle + 1
        } else {
            let credit = credits_due.keys().next().copied().unwrap_or(u64::MAX);
            next_event.min(credit).max(cycle + 1)
        };
        if step == u64::MAX {
            break;
        }
        cycle = step;
    }

    let times: MsgTimes =
        sim.state.iter().map(|s| (s.first_inject, s.first_eject, s.last_eject, s.injected, s.ejected)).collect();
    Ok((sim.result, (sim.stats, times)))
}
