//! Physical paths for every flow: dual-phase routing for collectives and the
//! static baseline algorithms.

pub mod baseline;
pub mod ea;
pub mod tree;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

pub use baseline::{baseline_path, BaselineRouting};
pub use ea::{ea_route_phase1, EaParams, LoadFitness};
pub use tree::{bfs_spanning_tree, bounding_rect, SpanningTree};

use crate::error::RoutingError;
use crate::model::{
    channels_of_path, flit_count, manhattan, ChannelId, Direction, FlowId, LocalPort, MeshTopology, NodeId,
    PatternKind, TrafficFlow,
};

/// X first, then Y. Inclusive of both endpoints.
pub fn xy_route(src: NodeId, dst: NodeId) -> Vec<NodeId> {
    let mut path = vec![src];
    let mut cur = src;
    while cur.x != dst.x {
        cur.x = if dst.x > cur.x { cur.x + 1 } else { cur.x - 1 };
        path.push(cur);
    }
    while cur.y != dst.y {
        cur.y = if dst.y > cur.y { cur.y + 1 } else { cur.y - 1 };
        path.push(cur);
    }
    path
}

/// Y first, then X.
pub fn yx_route(src: NodeId, dst: NodeId) -> Vec<NodeId> {
    let mut path = vec![src];
    let mut cur = src;
    while cur.y != dst.y {
        cur.y = if dst.y > cur.y { cur.y + 1 } else { cur.y - 1 };
        path.push(cur);
    }
    while cur.x != dst.x {
        cur.x = if dst.x > cur.x { cur.x + 1 } else { cur.x - 1 };
        path.push(cur);
    }
    path
}

/// Chain X-Y legs through `via`, dropping the duplicated junction nodes.
/// Loops are kept; see [`loop_erase`].
pub fn expand_intermediates(src: NodeId, dst: NodeId, via: &[NodeId]) -> Vec<NodeId> {
    let mut path = vec![src];
    let mut cur = src;
    for &next in via.iter().chain([&dst]) {
        path.extend(xy_route(cur, next).into_iter().skip(1));
        cur = next;
    }
    path
}

/// Cut every cycle out of a walk so each node appears once.
pub fn loop_erase(walk: Vec<NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    let mut pos: HashMap<NodeId, usize> = HashMap::new();
    for n in walk {
        if let Some(&i) = pos.get(&n) {
            for dropped in out.drain(i + 1..) {
                pos.remove(&dropped);
            }
        } else {
            pos.insert(n, out.len());
            out.push(n);
        }
    }
    out
}

/// Region tile nearest the flow's single terminal; ties go to the smallest `(y, x)`.
pub fn select_hub(flow: &TrafficFlow) -> NodeId {
    let t = flow.terminal();
    *flow.group().iter().min_by_key(|g| (manhattan(**g, t), g.y, g.x)).expect("validated flows have a nonempty group")
}

/// Hops saved by dual-phase routing over per-destination unicasts, given mean
/// terminal-to-region distance `l`, mean intra-region distance `k` and `m` terminals.
pub fn hop_savings(l: f64, k: f64, m: u32) -> f64 {
    l * (m as f64 - 1.0) - k * m as f64
}

/// Accumulated flit-slots per directed mesh link.
#[derive(Clone, Debug)]
pub struct ChannelLoads {
    width: u16,
    height: u16,
    links: Vec<u64>,
}

impl ChannelLoads {
    pub fn new(mesh: &MeshTopology) -> Self {
        Self { width: mesh.width, height: mesh.height, links: vec![0; mesh.node_count() * 4] }
    }

    fn slot(&self, from: NodeId, to: NodeId) -> Option<usize> {
        if from.x >= self.width || from.y >= self.height {
            return None;
        }
        let d = Direction::between(from, to)?;
        Some((from.y as usize * self.width as usize + from.x as usize) * 4 + d.index())
    }

    pub fn get_link(&self, from: NodeId, to: NodeId) -> u64 {
        self.slot(from, to).map_or(0, |i| self.links[i])
    }

    pub fn add_link(&mut self, from: NodeId, to: NodeId, flits: u64) {
        if let Some(i) = self.slot(from, to) {
            self.links[i] += flits;
        }
    }

    pub fn remove_link(&mut self, from: NodeId, to: NodeId, flits: u64) {
        if let Some(i) = self.slot(from, to) {
            self.links[i] = self.links[i].saturating_sub(flits);
        }
    }

    pub fn add_path(&mut self, path: &[NodeId], flits: u64) {
        for w in path.windows(2) {
            self.add_link(w[0], w[1], flits);
        }
    }

    pub fn max(&self) -> u64 {
        self.links.iter().copied().max().unwrap_or(0)
    }
}

/// How collectives and one-to-one flows are routed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutingOptions {
    /// Route collectives through a hub when that lowers channel traversals.
    pub dual_phase: bool,
    /// Balance one-to-one paths with the evolutionary search; plain X-Y otherwise.
    pub ea: Option<EaParams>,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        Self { dual_phase: true, ea: Some(EaParams::default()) }
    }
}

/// Route chosen for one flow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub flow_id: FlowId,
    pub kind: PatternKind,
    pub hub: NodeId,
    /// Terminal to hub for Multicast, hub to destination for Reduce, the whole
    /// path for one-to-one flows.
    pub phase1_path: Vec<NodeId>,
    /// Tree over the group rooted at the hub; a single node for one-to-one flows.
    pub phase2_tree: SpanningTree,
    /// False when the collective is carried by `unicast_paths` instead.
    pub dual_phase: bool,
    /// One path per group member (terminal to member, or member to terminal)
    /// when a collective falls back to unicasts.
    pub unicast_paths: Vec<Vec<NodeId>>,
    /// Flit-slots this flow puts on each channel.
    #[serde(with = "crate::model::map_as_pairs")]
    pub total_channel_loads: BTreeMap<ChannelId, u64>,
}

impl RoutePlan {
    /// Paths a Reduce source takes to the hub along the tree.
    pub fn gather_path(&self, source: NodeId) -> Vec<NodeId> {
        self.phase2_tree.path_to_root(source)
    }

    /// Link traversals summed over every flit stream this plan launches.
    pub fn channel_traversals(&self) -> usize {
        let hops = |p: &Vec<NodeId>| p.len().saturating_sub(1);
        if !self.dual_phase {
            return self.unicast_paths.iter().map(hops).sum::<usize>()
                + if self.unicast_paths.is_empty() { hops(&self.phase1_path) } else { 0 };
        }
        match self.kind {
            PatternKind::Reduce => {
                hops(&self.phase1_path)
                    + self.phase2_tree.terminals.iter().map(|&s| self.phase2_tree.depth[&s] as usize).sum::<usize>()
            }
            _ => hops(&self.phase1_path) + self.phase2_tree.edge_count(),
        }
    }

    /// Loop-free, adjacent-hop checks on every static path of the plan.
    pub fn check(&self) -> Result<(), RoutingError> {
        let paths = std::iter::once(&self.phase1_path).chain(&self.unicast_paths);
        for p in paths {
            channels_of_path(p)?;
            if loop_erase(p.clone()).len() != p.len() {
                return Err(RoutingError::LoopInPath(self.flow_id));
            }
        }
        Ok(())
    }
}

fn one_to_one(
    mesh: &MeshTopology,
    src: NodeId,
    dst: NodeId,
    flits: u64,
    loads: &ChannelLoads,
    opts: &RoutingOptions,
) -> Result<Vec<NodeId>, RoutingError> {
    match &opts.ea {
        Some(params) => ea_route_phase1(mesh, src, dst, flits, loads, params),
        None => Ok(xy_route(src, dst)),
    }
}

/// True when `path` crosses a tree link in the direction the tree carries data.
fn shares_tree_link(path: &[NodeId], tree: &SpanningTree, toward_root: bool) -> bool {
    let edges: BTreeSet<(NodeId, NodeId)> =
        tree.edges().into_iter().map(|(p, c, _)| if toward_root { (c, p) } else { (p, c) }).collect();
    path.windows(2).any(|w| edges.contains(&(w[0], w[1])))
}

/// Route one flow against the loads already placed by earlier flows.
pub fn route_flow(
    mesh: &MeshTopology,
    flow: &TrafficFlow,
    loads: &ChannelLoads,
    opts: &RoutingOptions,
) -> Result<RoutePlan, RoutingError> {
    let flits = flit_count(flow.volume, mesh.wire_width);
    for n in flow.sources.iter().chain(&flow.destinations) {
        if !mesh.contains(*n) {
            return Err(RoutingError::UnreachableTerminal(*n));
        }
    }
    let mut plan = match flow.kind {
        PatternKind::Unicast | PatternKind::LinkTransfer => {
            let (s, d) = (flow.sources[0], flow.destinations[0]);
            RoutePlan {
                flow_id: flow.id,
                kind: flow.kind,
                hub: d,
                phase1_path: one_to_one(mesh, s, d, flits, loads, opts)?,
                phase2_tree: SpanningTree::singleton(d),
                dual_phase: false,
                unicast_paths: Vec::new(),
                total_channel_loads: BTreeMap::new(),
            }
        }
        PatternKind::Multicast | PatternKind::Reduce => {
            let terminal = flow.terminal();
            let group = flow.group();
            let hub = select_hub(flow);
            let tree = bfs_spanning_tree(mesh, hub, group)?;
            let is_reduce = flow.kind == PatternKind::Reduce;
            let (from, to) = if is_reduce { (hub, terminal) } else { (terminal, hub) };
            let mut phase1 = one_to_one(mesh, from, to, flits, loads, opts)?;
            if shares_tree_link(&phase1, &tree, is_reduce) {
                // A detour that reuses a tree link would hold it twice in one worm.
                phase1 = xy_route(from, to);
            }
            let mut plan = RoutePlan {
                flow_id: flow.id,
                kind: flow.kind,
                hub,
                phase1_path: phase1,
                phase2_tree: tree,
                dual_phase: true,
                unicast_paths: Vec::new(),
                total_channel_loads: BTreeMap::new(),
            };
            let unicast_hops: usize = group.iter().map(|&g| manhattan(g, terminal) as usize).sum();
            if !opts.dual_phase || plan.channel_traversals() >= unicast_hops {
                plan.dual_phase = false;
                plan.hub = if is_reduce { terminal } else { group[0] };
                plan.phase1_path = vec![terminal];
                plan.phase2_tree = SpanningTree::singleton(terminal);
                let mut paths = Vec::with_capacity(group.len());
                for &g in group {
                    let p = if is_reduce {
                        one_to_one(mesh, g, terminal, flits, loads, opts)?
                    } else {
                        one_to_one(mesh, terminal, g, flits, loads, opts)?
                    };
                    paths.push(p);
                }
                plan.unicast_paths = paths;
            }
            plan
        }
    };
    plan.total_channel_loads = plan_loads(&plan, flow, flits);
    plan.check()?;
    Ok(plan)
}

fn plan_loads(plan: &RoutePlan, flow: &TrafficFlow, flits: u64) -> BTreeMap<ChannelId, u64> {
    let mut out: BTreeMap<ChannelId, u64> = BTreeMap::new();
    let mut add = |c: ChannelId| *out.entry(c).or_insert(0) += flits;
    let add_path = |p: &[NodeId], add: &mut dyn FnMut(ChannelId)| {
        for w in p.windows(2) {
            add(ChannelId::link(w[0], w[1]));
        }
    };
    if !plan.dual_phase && !plan.unicast_paths.is_empty() {
        for p in &plan.unicast_paths {
            add(ChannelId::Inject { node: p[0], port: flow.src_port });
            add_path(p, &mut add);
            add(ChannelId::Eject { node: *p.last().unwrap(), port: flow.dst_port });
        }
        return out;
    }
    match plan.kind {
        PatternKind::Reduce => {
            for &s in &plan.phase2_tree.terminals {
                if s != plan.hub {
                    let p = plan.gather_path(s);
                    add(ChannelId::Inject { node: s, port: flow.src_port });
                    add_path(&p, &mut add);
                    add(ChannelId::Eject { node: plan.hub, port: LocalPort::Tile });
                }
            }
            let p = &plan.phase1_path;
            if p.len() > 1 {
                add(ChannelId::Inject { node: p[0], port: LocalPort::Tile });
                add_path(p, &mut add);
                add(ChannelId::Eject { node: *p.last().unwrap(), port: flow.dst_port });
            }
        }
        _ => {
            add(ChannelId::Inject { node: plan.phase1_path[0], port: flow.src_port });
            add_path(&plan.phase1_path, &mut add);
            for (p, c, _) in plan.phase2_tree.edges() {
                add(ChannelId::link(p, c));
            }
            for &t in &plan.phase2_tree.terminals {
                add(ChannelId::Eject { node: t, port: flow.dst_port });
            }
        }
    }
    out
}

fn accumulate(loads: &mut ChannelLoads, plan: &RoutePlan, add: bool) {
    for (c, f) in &plan.total_channel_loads {
        if let ChannelId::Link { from, to } = c {
            if add {
                loads.add_link(*from, *to, *f);
            } else {
                loads.remove_link(*from, *to, *f);
            }
        }
    }
}

/// Route every flow in ready order. Each flow sees the loads of earlier flows
/// whose deadline has not passed by its ready time, so balancing only
/// considers traffic that can actually overlap in time.
/// The result is indexed like `flows`.
pub fn route_flows(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    opts: &RoutingOptions,
) -> Result<Vec<RoutePlan>, RoutingError> {
    route_flows_except(mesh, flows, opts, &BTreeSet::new())
}

/// Like [`route_flows`], but the listed flows are always carried by unicasts.
pub fn route_flows_except(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    opts: &RoutingOptions,
    unicast_only: &BTreeSet<FlowId>,
) -> Result<Vec<RoutePlan>, RoutingError> {
    let plain = RoutingOptions { dual_phase: false, ..*opts };
    let mut order: Vec<usize> = (0..flows.len()).collect();
    order.sort_by_key(|&i| (flows[i].ready_time, flows[i].id));
    let mut loads = ChannelLoads::new(mesh);
    let mut out: Vec<Option<RoutePlan>> = vec![None; flows.len()];
    let mut live: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    for i in order {
        while let Some(&Reverse((deadline, j))) = live.peek() {
            if deadline > flows[i].ready_time {
                break;
            }
            live.pop();
            accumulate(&mut loads, out[j].as_ref().expect("routed"), false);
        }
        let o = if unicast_only.contains(&flows[i].id) { &plain } else { opts };
        let plan = route_flow(mesh, &flows[i], &loads, o)?;
        accumulate(&mut loads, &plan, true);
        live.push(Reverse((flows[i].qos_deadline, i)));
        out[i] = Some(plan);
    }
    Ok(out.into_iter().map(|p| p.expect("every flow routed")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(x: u16, y: u16) -> NodeId {
        NodeId::new(x, y)
    }

    fn multicast(src: NodeId, dsts: Vec<NodeId>) -> TrafficFlow {
        TrafficFlow {
            id: 0,
            kind: PatternKind::Multicast,
            volume: 512,
            sources: vec![src],
            destinations: dsts,
            ready_time: 0,
            qos_deadline: 100,
            src_port: LocalPort::Tile,
            dst_port: LocalPort::Tile,
        }
    }

    fn rect(x0: u16, y0: u16, w: u16, h: u16) -> Vec<NodeId> {
        (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| n(x, y))).collect()
    }

    #[test]
    fn xy_route_examples() {
        assert_eq!(xy_route(n(0, 0), n(0, 0)), vec![n(0, 0)]);
        assert_eq!(xy_route(n(0, 0), n(2, 1)), vec![n(0, 0), n(1, 0), n(2, 0), n(2, 1)]);
        assert_eq!(xy_route(n(2, 1), n(0, 0)), vec![n(2, 1), n(1, 1), n(0, 1), n(0, 0)]);
    }

    #[test]
    fn expand_intermediates_examples() {
        assert_eq!(expand_intermediates(n(0, 0), n(2, 1), &[]), xy_route(n(0, 0), n(2, 1)));
        assert_eq!(
            expand_intermediates(n(0, 0), n(2, 2), &[n(2, 0)]),
            vec![n(0, 0), n(1, 0), n(2, 0), n(2, 1), n(2, 2)]
        );
        assert_eq!(expand_intermediates(n(0, 0), n(0, 0), &[n(1, 0)]), vec![n(0, 0), n(1, 0), n(0, 0)]);
    }

    #[test]
    fn loop_erase_cuts_cycles() {
        assert_eq!(loop_erase(vec![n(0, 0), n(1, 0), n(0, 0)]), vec![n(0, 0)]);
        let walk = vec![n(0, 0), n(1, 0), n(1, 1), n(0, 1), n(0, 0), n(0, 1), n(0, 2)];
        assert_eq!(loop_erase(walk), vec![n(0, 0), n(0, 1), n(0, 2)]);
    }

    #[test]
    fn hub_selection() {
        // MC on the west edge; the region tile closest to it wins.
        let f = multicast(n(0, 1), vec![n(3, 0), n(2, 0), n(2, 1), n(3, 1)]);
        assert_eq!(select_hub(&f), n(2, 1));
        assert_eq!(select_hub(&multicast(n(0, 0), vec![n(5, 5)])), n(5, 5));
        let f = multicast(n(0, 0), vec![n(2, 2), n(2, 3), n(3, 2), n(3, 3)]);
        // Brute force over the four candidates.
        let best = f.destinations.iter().copied().min_by_key(|d| (manhattan(*d, n(0, 0)), d.y, d.x)).unwrap();
        assert_eq!(select_hub(&f), best);
        assert_eq!(best, n(2, 2));
    }

    #[test]
    fn hub_ties_prefer_smaller_row() {
        let f = multicast(n(2, 2), vec![n(3, 2), n(2, 1), n(1, 2)]);
        assert_eq!(select_hub(&f), n(2, 1));
    }

    #[test]
    fn hop_savings_examples() {
        assert_eq!(hop_savings(3.0, 2.0, 1), -2.0);
        assert_eq!(hop_savings(6.0, 1.0, 4), 14.0);
        assert_eq!(hop_savings(5.0, 0.0, 2), 5.0);
    }

    #[test]
    fn hop_savings_on_a_real_instance() {
        // Source 6 hops west of a 4-tile row; every unicast shares the long run.
        let mesh = MeshTopology::new(16, 16, 256).unwrap();
        let region = vec![n(7, 0), n(8, 0), n(9, 0), n(10, 0)];
        let f = multicast(n(1, 0), region.clone());
        let opts = RoutingOptions { dual_phase: true, ea: None };
        let plan = route_flow(&mesh, &f, &ChannelLoads::new(&mesh), &opts).unwrap();
        assert!(plan.dual_phase);
        let unicast: usize = region.iter().map(|&d| xy_route(n(1, 0), d).len() - 1).sum();
        let per_dest: usize =
            plan.phase1_path.len() - 1 + region.iter().map(|d| plan.phase2_tree.depth[d] as usize).sum::<usize>();
        let l1 = plan.phase1_path.len() - 1;
        let k: usize = region.iter().map(|d| plan.phase2_tree.depth[d] as usize).sum();
        assert_eq!(unicast - per_dest, unicast - l1 - k);
        assert_eq!(unicast, 30);
        assert_eq!(per_dest, 12);
    }

    #[test]
    fn single_member_group_falls_back() {
        let mesh = MeshTopology::new(4, 4, 256).unwrap();
        let mut f = multicast(n(0, 0), vec![n(3, 3)]);
        f.kind = PatternKind::Unicast;
        let plan = route_flow(&mesh, &f, &ChannelLoads::new(&mesh), &RoutingOptions::default()).unwrap();
        assert_eq!(plan.hub, n(3, 3));
        assert_eq!(plan.phase2_tree.edge_count(), 0);
        assert_eq!(plan.phase1_path.len(), 7);
    }

    #[test]
    fn dual_phase_disabled_gives_unicasts() {
        let mesh = MeshTopology::new(8, 8, 256).unwrap();
        let f = multicast(n(0, 0), rect(4, 4, 2, 2));
        let opts = RoutingOptions { dual_phase: false, ea: None };
        let plan = route_flow(&mesh, &f, &ChannelLoads::new(&mesh), &opts).unwrap();
        assert!(!plan.dual_phase);
        assert_eq!(plan.unicast_paths.len(), 4);
        assert_eq!(plan.channel_traversals(), 8 + 9 + 9 + 10);
    }

    #[test]
    fn hub_inside_region_uses_tree_only() {
        let mesh = MeshTopology::new(8, 8, 256).unwrap();
        let f = multicast(n(4, 4), rect(4, 4, 2, 2));
        let plan = route_flow(&mesh, &f, &ChannelLoads::new(&mesh), &RoutingOptions::default()).unwrap();
        assert!(plan.dual_phase);
        assert_eq!(plan.phase1_path, vec![n(4, 4)]);
        assert_eq!(plan.channel_traversals(), 3);
    }

    proptest! {
        #[test]
        fn dual_phase_never_costs_more(sx in 0u16..16, sy in 0u16..16, x0 in 0u16..12, y0 in 0u16..12, w in 1u16..5, h in 1u16..5) {
            let mesh = MeshTopology::new(16, 16, 256).unwrap();
            let region = rect(x0, y0, w, h);
            let src = n(sx, sy);
            let f = multicast(src, region.clone());
            let opts = RoutingOptions { dual_phase: true, ea: None };
            let plan = route_flow(&mesh, &f, &ChannelLoads::new(&mesh), &opts).unwrap();
            // Independent traversal count: one X-Y unicast per destination.
            let unicast: usize = region.iter().map(|&d| xy_route(src, d).len() - 1).sum();
            prop_assert!(plan.channel_traversals() <= unicast);
            let savings = hop_savings(
                region.iter().map(|&d| manhattan(src, d) as f64).sum::<f64>() / region.len() as f64,
                region.iter().map(|&d| manhattan(plan.hub, d) as f64).sum::<f64>() / region.len() as f64,
                region.len() as u32,
            );
            if savings > 0.0 {
                prop_assert!(plan.channel_traversals() <= unicast);
            }
            prop_assert!(plan.check().is_ok());
        }

        #[test]
        fn detours_never_reuse_their_own_tree(seed in 0u64..2000) {
            use rand::{Rng, SeedableRng};
            let mesh = MeshTopology::new(5, 4, 256).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut loads = ChannelLoads::new(&mesh);
            for _ in 0..12 {
                let a = n(rng.gen_range(0..5), rng.gen_range(0..4));
                let b = n(rng.gen_range(0..5), rng.gen_range(0..4));
                loads.add_path(&xy_route(a, b), rng.gen_range(1..60));
            }
            let src = n(rng.gen_range(0..5), rng.gen_range(0..4));
            let mut dsts: Vec<NodeId> = Vec::new();
            while dsts.len() < 4 {
                let d = n(rng.gen_range(0..5), rng.gen_range(0..4));
                if d != src && !dsts.contains(&d) {
                    dsts.push(d);
                }
            }
            let mut f = multicast(src, dsts);
            f.volume = 256 * 40;
            let plan = route_flow(&mesh, &f, &loads, &RoutingOptions::default()).unwrap();
            prop_assert!(!shares_tree_link(&plan.phase1_path, &plan.phase2_tree, false));
        }

        #[test]
        fn route_flows_is_deterministic(seed in 0u64..50) {
            let mesh = MeshTopology::new(6, 6, 256).unwrap();
            let mut flows = Vec::new();
            for i in 0..6u32 {
                let s = n(((seed + i as u64 * 7) % 6) as u16, ((seed / 3 + i as u64) % 6) as u16);
                let d = n(((seed * 5 + i as u64) % 6) as u16, ((seed + 2 * i as u64) % 6) as u16);
                let mut f = multicast(s, vec![d]);
                f.id = i;
                f.kind = PatternKind::Unicast;
                flows.push(f);
            }
            let opts = RoutingOptions { dual_phase: true, ea: Some(EaParams { rng_seed: seed, ..EaParams::default() }) };
            let a = route_flows(&mesh, &flows, &opts).unwrap();
            let b = route_flows(&mesh, &flows, &opts).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
