//! Scheduled fabric: single-VC routers with a one-flit register per input,
//! no arbiters, hybrid source/table routing and wormhole switching.
//!
//! A flit crossing a crossbar at cycle `c` reaches the next crossbar at
//! `c + wire_cycles + router_cycles`. Flits enter at the source crossbar at
//! their injection cycle. Any two legs meeting on one channel, whether in the
//! same cycle or inside each other's head-to-tail window, is reported as a
//! runtime conflict.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{FlowTiming, Port, SimResult};
use crate::error::SimError;
use crate::hwconfig::{decode_next_port, AcceleratorConfig, BitString, PortCode, MASK_OUTPUT};
use crate::model::{ChannelId, Direction, LocalPort, MeshTopology, NodeId, TrafficFlow};
use crate::schedule::{InjectionSchedule, Leg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetroParams {
    pub router_cycles: u32,
    pub wire_cycles: u32,
    /// Memory-controller injection bandwidth in bits per cycle.
    pub mc_bits_per_cycle: Option<u64>,
    pub trace: bool,
}

impl Default for MetroParams {
    fn default() -> Self {
        Self { router_cycles: 2, wire_cycles: 1, mc_bits_per_cycle: Some(1200), trace: false }
    }
}

impl MetroParams {
    pub fn hop_cycles(&self) -> u32 {
        self.router_cycles + self.wire_cycles
    }
}

#[derive(Clone, Debug)]
enum Mode {
    Source(BitString),
    Table,
}

struct Ev {
    router: NodeId,
    inp: Port,
    leg: usize,
    seq: u64,
    /// Routing state carried by head flits only.
    head: Option<Mode>,
}

struct Latch {
    leg: usize,
    outs: Vec<Port>,
    forward: Option<Mode>,
}

fn out_channel(router: NodeId, p: Port, mesh: &MeshTopology) -> Option<ChannelId> {
    match p {
        Port::Dir(d) => router.step(d, mesh).map(|n| ChannelId::link(router, n)),
        Port::Local(port) => Some(ChannelId::Eject { node: router, port }),
    }
}

fn in_channel(router: NodeId, p: Port, mesh: &MeshTopology) -> ChannelId {
    match p {
        Port::Dir(d) => ChannelId::link(router.step(d, mesh).expect("flit came from a neighbour"), router),
        Port::Local(port) => ChannelId::Inject { node: router, port },
    }
}

fn mask_ports(mask: u8, eject: LocalPort) -> Vec<Port> {
    let mut out = Vec::new();
    for d in Direction::ALL {
        if mask & crate::hwconfig::direction_mask(d) != 0 {
            out.push(Port::Dir(d));
        }
    }
    if mask & MASK_OUTPUT != 0 {
        out.push(Port::Local(eject));
    }
    out
}

/// Release cycle of every flit of a leg, honouring the MC bandwidth cap.
fn release_cycles(leg: &Leg, inject: u64, wire: u32, cap: Option<u64>) -> Vec<u64> {
    let cap = match (leg.src_port, cap) {
        (LocalPort::Mc, Some(c)) if c < wire as u64 => Some(c),
        _ => None,
    };
    let mut out = Vec::with_capacity(leg.flits as usize);
    let mut cycle = inject;
    let mut sent_bits = 0u64;
    for _ in 0..leg.flits {
        if let Some(c) = cap {
            // Token bucket with no burst: the k-th flit waits until k·F bits of budget accrued.
            while (cycle - inject) * c < sent_bits {
                cycle += 1;
            }
        }
        out.push(cycle);
        sent_bits += wire as u64;
        cycle += 1;
    }
    out
}

/// Replay a schedule on the configured fabric.
pub fn simulate_metro(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    legs: &[Leg],
    config: &AcceleratorConfig,
    schedule: &InjectionSchedule,
    params: &MetroParams,
) -> Result<SimResult, SimError> {
    let hop = params.hop_cycles();
    if schedule.slot_cost != hop {
        return Err(SimError::SlotCostMismatch { scheduled: schedule.slot_cost, hardware: hop });
    }
    let pipe = hop as u64;
    let wire = config.wire_width;

    let mut events: BTreeMap<u64, Vec<Ev>> = BTreeMap::new();
    for (li, leg) in legs.iter().enumerate() {
        let t = schedule.legs[li].inject;
        for (k, c) in release_cycles(leg, t, wire, params.mc_bits_per_cycle).into_iter().enumerate() {
            let head = (k == 0).then(|| Mode::Source(config.headers[li].route.clone()));
            events.entry(c).or_default().push(Ev {
                router: leg.src(),
                inp: Port::Local(leg.src_port),
                leg: li,
                seq: k as u64,
                head,
            });
        }
    }

    let mut latch: HashMap<(NodeId, Port), Latch> = HashMap::new();
    let mut holder: HashMap<(NodeId, Port), usize> = HashMap::new();
    let mut in_holder: HashMap<(NodeId, Port), usize> = HashMap::new();
    // Per leg: router -> (first eject, last eject, flits ejected).
    let mut ejects: Vec<BTreeMap<NodeId, (u64, u64, u64)>> = vec![BTreeMap::new(); legs.len()];
    let mut first_out: Vec<Option<u64>> = vec![None; legs.len()];
    let mut result = SimResult::default();

    while let Some((cycle, mut batch)) = events.pop_first() {
        batch.sort_by_key(|e| (e.router, e.inp, e.leg, e.seq));
        let mut used: HashMap<ChannelId, usize> = HashMap::new();
        for ev in batch {
            let leg = &legs[ev.leg];
            let key = (ev.router, ev.inp);
            if ev.seq == 0 && ev.inp == Port::Local(leg.src_port) {
                for &d in &leg.depends_on {
                    let done = ejects[d].values().map(|e| e.1 + 1).max();
                    let complete = ejects[d].values().map(|e| e.2).sum::<u64>()
                        >= legs[d].flits * legs[d].tree.terminals.len() as u64;
                    if !complete || done.is_some_and(|x| x > cycle) {
                        return Err(SimError::DependencyNotMet { leg: ev.leg, cycle });
                    }
                }
                first_out[ev.leg] = Some(cycle);
            }

            // Input side: one leg owns an input from head to tail.
            let in_ch = in_channel(ev.router, ev.inp, mesh);
            match in_holder.get(&key) {
                Some(&other) if other != ev.leg => {
                    return Err(SimError::RuntimeConflict { cycle, channel: in_ch, legs: vec![other, ev.leg] });
                }
                _ => {
                    in_holder.insert(key, ev.leg);
                }
            }
            if ev.inp == Port::Local(leg.src_port) {
                if let Some(other) = used.insert(in_ch, ev.leg) {
                    return Err(SimError::RuntimeConflict { cycle, channel: in_ch, legs: vec![other, ev.leg] });
                }
                *result.channel_busy.entry(in_ch).or_insert(0) += 1;
            }

            if let Some(mode) = ev.head {
                let (outs, forward) = match mode {
                    Mode::Source(field) => {
                        let (code, rest) = decode_next_port(&field)?;
                        match code {
                            PortCode::Output => (vec![Port::Local(leg.dst_port)], None),
                            PortCode::Nop => {
                                let id = config.headers[ev.leg].flow_id;
                                let mask = config
                                    .lookup(ev.router, id)
                                    .ok_or(SimError::NoRoute { leg: ev.leg, node: ev.router })?;
                                (mask_ports(mask, leg.dst_port), Some(Mode::Table))
                            }
                            dir => {
                                (vec![Port::Dir(dir.direction().expect("direction code"))], Some(Mode::Source(rest)))
                            }
                        }
                    }
                    Mode::Table => {
                        let id = config.headers[ev.leg].flow_id;
                        let mask =
                            config.lookup(ev.router, id).ok_or(SimError::NoRoute { leg: ev.leg, node: ev.router })?;
                        (mask_ports(mask, leg.dst_port), Some(Mode::Table))
                    }
                };
                for &o in &outs {
                    if out_channel(ev.router, o, mesh).is_none() {
                        return Err(SimError::NoRoute { leg: ev.leg, node: ev.router });
                    }
                    if let Some(&other) = holder.get(&(ev.router, o)) {
                        if other != ev.leg {
                            let ch = out_channel(ev.router, o, mesh).unwrap();
                            return Err(SimError::RuntimeConflict { cycle, channel: ch, legs: vec![other, ev.leg] });
                        }
                    }
                    holder.insert((ev.router, o), ev.leg);
                }
                latch.insert(key, Latch { leg: ev.leg, outs, forward });
            }

            let l = match latch.get(&key) {
                Some(l) if l.leg == ev.leg => l,
                _ => return Err(SimError::NoRoute { leg: ev.leg, node: ev.router }),
            };
            for &o in &l.outs {
                let ch = out_channel(ev.router, o, mesh).unwrap();
                if let Some(other) = used.insert(ch, ev.leg) {
                    return Err(SimError::RuntimeConflict { cycle, channel: ch, legs: vec![other, ev.leg] });
                }
                *result.channel_busy.entry(ch).or_insert(0) += 1;
                if params.trace {
                    result.trace.push(format!("{cycle} leg {} flit {} {} -> {}", ev.leg, ev.seq, ev.router, ch));
                }
                match o {
                    Port::Dir(d) => {
                        let next = ev.router.step(d, mesh).unwrap();
                        let head = if ev.seq == 0 { l.forward.clone() } else { None };
                        events.entry(cycle + pipe).or_default().push(Ev {
                            router: next,
                            inp: Port::Dir(d.opposite()),
                            leg: ev.leg,
                            seq: ev.seq,
                            head,
                        });
                    }
                    Port::Local(_) => {
                        let e = ejects[ev.leg].entry(ev.router).or_insert((cycle, cycle, 0));
                        e.1 = cycle;
                        e.2 += 1;
                    }
                }
            }
            if ev.seq + 1 == leg.flits {
                let l = latch.remove(&key).unwrap();
                for o in l.outs {
                    holder.remove(&(ev.router, o));
                }
                in_holder.remove(&key);
            }
        }
    }

    // Legs nobody depends on deliver to the flow's final receivers.
    let mut feeds = vec![false; legs.len()];
    for leg in legs {
        for &d in &leg.depends_on {
            feeds[d] = true;
        }
    }
    let mut by_flow: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, l) in legs.iter().enumerate() {
        by_flow.entry(l.flow_id).or_default().push(i);
    }
    for f in flows {
        let ids = by_flow.get(&f.id).cloned().unwrap_or_default();
        let mut t = FlowTiming {
            flow_id: f.id,
            injection: f.ready_time,
            head_arrival: f.ready_time,
            tail_arrival: f.ready_time,
            ..FlowTiming::default()
        };
        if !ids.is_empty() {
            t.injection = ids.iter().filter_map(|&i| first_out[i]).min().unwrap_or(f.ready_time);
            t.head_arrival = u64::MAX;
            for &i in &ids {
                t.flits_injected += legs[i].flits;
                for (&node, &(first, last, count)) in &ejects[i] {
                    t.flits_ejected += count;
                    if !feeds[i] {
                        t.head_arrival = t.head_arrival.min(first);
                        t.tail_arrival = t.tail_arrival.max(last + 1);
                        let e = t.dest_arrival.entry(node).or_insert(0);
                        *e = (*e).max(last + 1);
                    }
                }
            }
            if t.head_arrival == u64::MAX {
                t.head_arrival = t.injection;
            }
        }
        for &d in &f.destinations {
            t.dest_arrival.entry(d).or_insert(t.tail_arrival);
        }
        result.makespan = result.makespan.max(t.tail_arrival);
        result.flows.insert(f.id, t);
    }
    Ok(result)
}
