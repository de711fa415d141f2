//! Turns a layer-to-tile mapping into the set of traffic flows it induces.
//!
//! Every layer runs a double-buffered iteration pipeline. With period `P`
//! (the layer's compute slots, stretched to its upstream's period when that
//! is slower) and start offset `S0`, iteration `i` computes from
//! `S0 + (i+1)·P` for `compute_slots_per_iteration` slots. Its weights and
//! inputs are prefetched during the previous iteration's compute and its
//! partial sums are reduced while the next two iterations run.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::TrafficError;
use crate::model::{manhattan, LocalPort, MeshTopology, NodeId, PatternKind, Provenance, SlotIndex, TrafficFlow};

/// One DNN layer mapped onto a consecutive region of tiles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub tile_count: usize,
    /// Assigned tiles; empty until [`place_regions`] runs.
    pub region: Vec<NodeId>,
    pub weight_tile_bits: u64,
    pub input_tile_bits: u64,
    pub output_tile_bits: u64,
    pub iterations: u32,
    pub compute_slots_per_iteration: u64,
    /// Tile that accumulates partial results; defaults to the region medoid.
    pub reduction_tile: Option<NodeId>,
    pub upstream: Option<String>,
    /// Memory controller serving this layer; defaults to the nearest one.
    pub mc: Option<NodeId>,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, tile_count: usize) -> Self {
        Self {
            name: name.into(),
            tile_count,
            region: Vec::new(),
            weight_tile_bits: 1,
            input_tile_bits: 1,
            output_tile_bits: 1,
            iterations: 1,
            compute_slots_per_iteration: 1,
            reduction_tile: None,
            upstream: None,
            mc: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub mesh: MeshTopology,
    pub layers: Vec<LayerSpec>,
}

/// Per-flow bookkeeping that ties a flow back to the pipeline step that made it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowTag {
    pub layer: usize,
    pub iteration: u32,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationGraph {
    pub flows: Vec<TrafficFlow>,
    pub tags: Vec<FlowTag>,
}

impl CommunicationGraph {
    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}

/// Nominal timing of one layer's iteration pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTiming {
    pub start: SlotIndex,
    pub period: u64,
    pub compute: u64,
    pub iterations: u32,
    pub has_reduce: bool,
}

impl LayerTiming {
    /// Nominal compute start of iteration `i`.
    pub fn iteration_start(&self, i: u32) -> SlotIndex {
        self.start + (i as u64 + 1) * self.period
    }

    /// Slot at which iteration `j`'s reduced output is available on the reduction tile.
    pub fn output_ready(&self, j: u32) -> SlotIndex {
        if self.has_reduce {
            self.iteration_start(j + 2)
        } else {
            self.iteration_start(j) + self.compute
        }
    }
}

/// Point `d` along the Hilbert curve filling an `n`×`n` square (`n` a power of two).
pub fn hilbert_d2xy(n: u32, d: u64) -> (u32, u32) {
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = d;
    let mut s = 1u64;
    while s < n as u64 {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x as u32, y as u32)
}

/// All mesh nodes in Hilbert order. Non-square or non-power-of-two meshes
/// are embedded in the enclosing power-of-two square and out-of-mesh points
/// are skipped.
pub fn hilbert_order(mesh: &MeshTopology) -> Vec<NodeId> {
    let side = (mesh.width.max(mesh.height) as u32).next_power_of_two();
    (0..side as u64 * side as u64)
        .map(|d| hilbert_d2xy(side, d))
        .filter(|&(x, y)| x < mesh.width as u32 && y < mesh.height as u32)
        .map(|(x, y)| NodeId::new(x as u16, y as u16))
        .collect()
}

/// Assign each unplaced layer a consecutive run of tiles along the Hilbert curve.
///
/// Layers that already carry a region keep it; their tiles are skipped.
pub fn place_regions(mut workload: WorkloadSpec) -> Result<WorkloadSpec, TrafficError> {
    let available = workload.mesh.node_count();
    let demanded: usize = workload.layers.iter().map(|l| l.tile_count.max(l.region.len())).sum();
    if demanded > available || workload.layers.iter().any(|l| l.tile_count == 0 && l.region.is_empty()) {
        return Err(TrafficError::CapacityExceeded { demanded, available });
    }
    let taken: HashSet<NodeId> = workload.layers.iter().flat_map(|l| l.region.iter().copied()).collect();
    let mut free = hilbert_order(&workload.mesh).into_iter().filter(|n| !taken.contains(n));
    for layer in workload.layers.iter_mut().filter(|l| l.region.is_empty()) {
        layer.region = free.by_ref().take(layer.tile_count).collect();
        if layer.region.len() < layer.tile_count {
            return Err(TrafficError::CapacityExceeded { demanded, available });
        }
    }
    for layer in &mut workload.layers {
        layer.tile_count = layer.region.len();
    }
    Ok(workload)
}

/// Region tile with the smallest total distance to the rest; first in region order on ties.
pub fn region_medoid(region: &[NodeId]) -> NodeId {
    let mut best = region[0];
    let mut best_cost = u64::MAX;
    for &c in region {
        let cost: u64 = region.iter().map(|&o| manhattan(c, o) as u64).sum();
        if cost < best_cost {
            best_cost = cost;
            best = c;
        }
    }
    best
}

/// Memory controller closest to any tile of the region; first listed on ties.
pub fn nearest_mc(mesh: &MeshTopology, region: &[NodeId]) -> Option<NodeId> {
    mesh.mc_nodes.iter().copied().min_by_key(|&mc| region.iter().map(|&t| manhattan(mc, t)).min().unwrap_or(u32::MAX))
}

impl WorkloadSpec {
    /// Check layer invariants and fill defaulted reduction tiles and MCs.
    pub fn validate(&mut self) -> Result<(), TrafficError> {
        self.mesh.validate()?;
        let mut owner: HashMap<NodeId, String> = HashMap::new();
        let mut names = HashSet::new();
        for layer in &mut self.layers {
            if !names.insert(layer.name.clone()) {
                return Err(TrafficError::DuplicateLayer(layer.name.clone()));
            }
            if layer.region.is_empty() {
                return Err(TrafficError::EmptyRegion(layer.name.clone()));
            }
            if layer.weight_tile_bits == 0
                || layer.input_tile_bits == 0
                || layer.output_tile_bits == 0
                || layer.iterations == 0
                || layer.compute_slots_per_iteration == 0
            {
                return Err(TrafficError::ZeroSize(layer.name.clone()));
            }
            let mut seen = HashSet::new();
            for &t in &layer.region {
                if !self.mesh.contains(t) || !seen.insert(t) {
                    return Err(TrafficError::BadTile { layer: layer.name.clone(), tile: t });
                }
                if let Some(first) = owner.insert(t, layer.name.clone()) {
                    return Err(TrafficError::RegionOverlap { tile: t, first, second: layer.name.clone() });
                }
            }
            layer.tile_count = layer.region.len();
            let reduction = *layer.reduction_tile.get_or_insert_with(|| region_medoid(&layer.region));
            if !layer.region.contains(&reduction) {
                return Err(TrafficError::ReductionTileOutsideRegion(layer.name.clone()));
            }
            match layer.mc {
                Some(mc) if !self.mesh.is_mc(mc) => {
                    return Err(TrafficError::UnknownMc { layer: layer.name.clone(), node: mc });
                }
                Some(_) => {}
                None => layer.mc = nearest_mc(&self.mesh, &layer.region),
            }
        }
        for layer in &self.layers {
            if let Some(up) = &layer.upstream {
                if !names.contains(up) {
                    return Err(TrafficError::DanglingUpstream { layer: layer.name.clone(), upstream: up.clone() });
                }
            }
        }
        self.layer_timings()?;
        Ok(())
    }

    /// Nominal pipeline timing per layer, resolving upstream chains.
    pub fn layer_timings(&self) -> Result<Vec<LayerTiming>, TrafficError> {
        let index: HashMap<&str, usize> = self.layers.iter().enumerate().map(|(i, l)| (l.name.as_str(), i)).collect();
        let mut out: Vec<Option<LayerTiming>> = vec![None; self.layers.len()];
        for i in 0..self.layers.len() {
            let mut chain = vec![i];
            let mut seen = HashSet::from([i]);
            // Walk up to the first resolved (or root) layer, then resolve downwards.
            loop {
                let cur = *chain.last().unwrap();
                if out[cur].is_some() {
                    chain.pop();
                    break;
                }
                match &self.layers[cur].upstream {
                    Some(up) => {
                        let u = *index.get(up.as_str()).ok_or_else(|| TrafficError::DanglingUpstream {
                            layer: self.layers[cur].name.clone(),
                            upstream: up.clone(),
                        })?;
                        if !seen.insert(u) {
                            return Err(TrafficError::UpstreamCycle(self.layers[i].name.clone()));
                        }
                        chain.push(u);
                    }
                    None => break,
                }
            }
            while let Some(cur) = chain.pop() {
                let layer = &self.layers[cur];
                let compute = layer.compute_slots_per_iteration;
                let timing = match layer.upstream.as_ref().map(|u| index[u.as_str()]) {
                    Some(u) => {
                        let up = out[u].expect("upstream resolved first");
                        LayerTiming {
                            start: up.output_ready(0),
                            period: compute.max(up.period),
                            compute,
                            iterations: layer.iterations,
                            has_reduce: layer.region.len() > 1,
                        }
                    }
                    None => LayerTiming {
                        start: 0,
                        period: compute,
                        compute,
                        iterations: layer.iterations,
                        has_reduce: layer.region.len() > 1,
                    },
                };
                out[cur] = Some(timing);
            }
        }
        Ok(out.into_iter().map(|t| t.expect("every layer resolved")).collect())
    }

    /// Whether some other layer consumes this layer's output on chip.
    pub fn has_downstream(&self, layer: usize) -> bool {
        let name = &self.layers[layer].name;
        self.layers.iter().any(|l| l.upstream.as_deref() == Some(name.as_str()))
    }
}

/// Expand a validated workload into its flows, sorted by ready time.
pub fn extract_flows(workload: &WorkloadSpec) -> Result<CommunicationGraph, TrafficError> {
    let timings = workload.layer_timings()?;
    let index: HashMap<&str, usize> = workload.layers.iter().enumerate().map(|(i, l)| (l.name.as_str(), i)).collect();

    let mut pending: Vec<(TrafficFlow, FlowTag)> = Vec::new();
    for (li, layer) in workload.layers.iter().enumerate() {
        let timing = timings[li];
        let n = layer.region.len() as u64;
        let region = layer.region.clone();
        let reduction = layer.reduction_tile.unwrap_or_else(|| region_medoid(&region));
        let mc = layer.mc.or_else(|| nearest_mc(&workload.mesh, &region));
        let spread_kind = if region.len() == 1 { PatternKind::Unicast } else { PatternKind::Multicast };
        let upstream_tile = match &layer.upstream {
            Some(up) => {
                let u = *index.get(up.as_str()).ok_or_else(|| TrafficError::DanglingUpstream {
                    layer: layer.name.clone(),
                    upstream: up.clone(),
                })?;
                let upl = &workload.layers[u];
                Some(upl.reduction_tile.unwrap_or_else(|| region_medoid(&upl.region)))
            }
            None => None,
        };

        let mut push = |flow: TrafficFlow, iteration: u32, provenance: Provenance| {
            pending.push((flow, FlowTag { layer: li, iteration, provenance }));
        };

        for i in 0..layer.iterations {
            let ready = timing.start + i as u64 * timing.period;
            let deadline = timing.iteration_start(i);
            if let Some(mc) = mc {
                push(
                    TrafficFlow {
                        id: 0,
                        kind: spread_kind,
                        volume: layer.weight_tile_bits * n,
                        sources: vec![mc],
                        destinations: region.clone(),
                        ready_time: ready,
                        qos_deadline: deadline,
                        src_port: LocalPort::Mc,
                        dst_port: LocalPort::Tile,
                    },
                    i,
                    Provenance::Weights,
                );
            }
            let (src, src_port, provenance) = match upstream_tile {
                Some(t) => (Some(t), LocalPort::Tile, Provenance::InterLayer),
                None => (mc, LocalPort::Mc, Provenance::Inputs),
            };
            if let Some(src) = src {
                push(
                    TrafficFlow {
                        id: 0,
                        kind: spread_kind,
                        volume: layer.input_tile_bits * n,
                        sources: vec![src],
                        destinations: region.clone(),
                        ready_time: ready,
                        qos_deadline: deadline,
                        src_port,
                        dst_port: LocalPort::Tile,
                    },
                    i,
                    provenance,
                );
            }
            if timing.has_reduce {
                push(
                    TrafficFlow {
                        id: 0,
                        kind: PatternKind::Reduce,
                        volume: layer.output_tile_bits,
                        sources: region.clone(),
                        destinations: vec![reduction],
                        ready_time: timing.iteration_start(i) + timing.compute,
                        qos_deadline: timing.iteration_start(i + 2),
                        src_port: LocalPort::Tile,
                        dst_port: LocalPort::Tile,
                    },
                    i,
                    Provenance::PsumReduce,
                );
            }
        }
        if !workload.has_downstream(li) {
            if let Some(mc) = mc {
                let last = layer.iterations - 1;
                let ready = timing.output_ready(last);
                push(
                    TrafficFlow {
                        id: 0,
                        kind: PatternKind::Unicast,
                        volume: layer.output_tile_bits * layer.iterations as u64,
                        sources: vec![reduction],
                        destinations: vec![mc],
                        ready_time: ready,
                        qos_deadline: ready + timing.period,
                        src_port: LocalPort::Tile,
                        dst_port: LocalPort::Mc,
                    },
                    last,
                    Provenance::OutputSpill,
                );
            }
        }
    }

    pending.sort_by_key(|(f, t)| (f.ready_time, t.layer, t.iteration, t.provenance));
    let mut graph = CommunicationGraph::default();
    for (id, (mut flow, tag)) in pending.into_iter().enumerate() {
        flow.id = id as u32;
        flow.validate()?;
        graph.flows.push(flow);
        graph.tags.push(tag);
    }
    Ok(graph)
}

/// Slots left until the flow's deadline; negative once it is late.
pub fn qos_slack(flow: &TrafficFlow, now: SlotIndex) -> i64 {
    flow.qos_deadline as i64 - now as i64
}

/// Total bits each layer pulls from memory controllers, keyed by layer index.
pub fn mc_injected_bits(graph: &CommunicationGraph) -> BTreeMap<usize, u64> {
    let mut out = BTreeMap::new();
    for (f, t) in graph.flows.iter().zip(&graph.tags) {
        if f.src_port == LocalPort::Mc {
            *out.entry(t.layer).or_insert(0) += f.volume;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(x: u16, y: u16) -> NodeId {
        NodeId::new(x, y)
    }

    /// Independent oracle: inverse mapping from the classic xy2d routine.
    fn xy2d(side: u64, mut x: u64, mut y: u64) -> u64 {
        let mut d = 0;
        let mut s = side / 2;
        while s > 0 {
            let rx = ((x & s) > 0) as u64;
            let ry = ((y & s) > 0) as u64;
            d += s * s * ((3 * rx) ^ ry);
            if ry == 0 {
                if rx == 1 {
                    x = side - 1 - x;
                    y = side - 1 - y;
                }
                std::mem::swap(&mut x, &mut y);
            }
            s /= 2;
        }
        d
    }

    fn workload(w: u16, h: u16, layers: Vec<LayerSpec>) -> WorkloadSpec {
        WorkloadSpec { mesh: MeshTopology::new(w, h, 256).unwrap(), layers }
    }

    #[test]
    fn hilbert_order_two_by_two() {
        let mesh = MeshTopology::new(2, 2, 256).unwrap();
        assert_eq!(hilbert_order(&mesh), vec![n(0, 0), n(0, 1), n(1, 1), n(1, 0)]);
    }

    #[test]
    fn hilbert_matches_inverse_oracle_and_is_continuous() {
        for side in [2u32, 4, 8, 16] {
            let mut prev: Option<(u32, u32)> = None;
            for d in 0..(side as u64 * side as u64) {
                let (x, y) = hilbert_d2xy(side, d);
                assert_eq!(xy2d(side as u64, x as u64, y as u64), d);
                if let Some((px, py)) = prev {
                    assert_eq!(px.abs_diff(x) + py.abs_diff(y), 1);
                }
                prev = Some((x, y));
            }
        }
    }

    #[test]
    fn place_single_layer_fills_curve() {
        let w = place_regions(workload(2, 2, vec![LayerSpec::new("a", 4)])).unwrap();
        assert_eq!(w.layers[0].region, vec![n(0, 0), n(0, 1), n(1, 1), n(1, 0)]);
    }

    #[test]
    fn place_two_layers_disjoint_and_contiguous() {
        let w = place_regions(workload(4, 4, vec![LayerSpec::new("a", 4), LayerSpec::new("b", 4)])).unwrap();
        let order = hilbert_order(&w.mesh);
        let pos = |t: &NodeId| order.iter().position(|o| o == t).unwrap();
        for layer in &w.layers {
            let mut p: Vec<usize> = layer.region.iter().map(pos).collect();
            p.sort();
            assert!(p.windows(2).all(|x| x[1] == x[0] + 1));
        }
        assert!(w.layers[0].region.iter().all(|t| !w.layers[1].region.contains(t)));
    }

    #[test]
    fn place_rejects_zero_and_overflow() {
        assert!(matches!(
            place_regions(workload(2, 2, vec![LayerSpec::new("a", 0)])),
            Err(TrafficError::CapacityExceeded { .. })
        ));
        assert!(matches!(
            place_regions(workload(2, 2, vec![LayerSpec::new("a", 3), LayerSpec::new("b", 2)])),
            Err(TrafficError::CapacityExceeded { demanded: 5, available: 4 })
        ));
    }

    #[test]
    fn non_power_of_two_mesh_is_fully_covered() {
        let mesh = MeshTopology::new(3, 5, 256).unwrap();
        let order = hilbert_order(&mesh);
        assert_eq!(order.len(), 15);
        let set: HashSet<_> = order.iter().collect();
        assert_eq!(set.len(), 15);
    }

    #[test]
    fn multicast_from_holder_to_two_tiles() {
        // A tensor held by tile C and needed by tiles A and B: one pattern,
        // C as source, A and B as destinations, volume equal to the tensor.
        let mut layer = LayerSpec::new("ab", 2);
        layer.region = vec![n(2, 2), n(3, 2)];
        layer.input_tile_bits = 1000;
        let mut up = LayerSpec::new("c", 1);
        up.region = vec![n(0, 2)];
        layer.upstream = Some("c".into());
        let mut w = workload(4, 4, vec![up, layer]);
        w.validate().unwrap();
        let g = extract_flows(&w).unwrap();
        let inter: Vec<_> = g
            .flows
            .iter()
            .zip(&g.tags)
            .filter(|(_, t)| t.provenance == Provenance::InterLayer)
            .map(|(f, _)| f)
            .collect();
        assert_eq!(inter.len(), 1);
        assert_eq!(inter[0].kind, PatternKind::Multicast);
        assert_eq!(inter[0].sources, vec![n(0, 2)]);
        assert_eq!(inter[0].destinations, vec![n(2, 2), n(3, 2)]);
        assert_eq!(inter[0].volume, 2000);
    }

    #[test]
    fn single_tile_layer_yields_three_unicasts() {
        let mut layer = LayerSpec::new("solo", 1);
        layer.region = vec![n(1, 1)];
        let mut w = workload(4, 4, vec![layer]);
        w.validate().unwrap();
        let g = extract_flows(&w).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.flows.iter().all(|f| f.kind == PatternKind::Unicast));
        let provs: Vec<_> = g.tags.iter().map(|t| t.provenance).collect();
        assert_eq!(provs, vec![Provenance::Weights, Provenance::Inputs, Provenance::OutputSpill]);
    }

    #[test]
    fn four_tile_two_iteration_skeleton() {
        // Hand-enumerated pipeline for C = 100, P = C:
        //   prefetch(i) ready i·C, due (i+1)·C
        //   reduce(i)   ready (i+1)·C + C, due (i+3)·C
        //   spill       ready 4·C, due 5·C
        let mut layer = LayerSpec::new("l", 4);
        layer.region = vec![n(0, 0), n(0, 1), n(1, 1), n(1, 0)];
        layer.iterations = 2;
        layer.compute_slots_per_iteration = 100;
        let mut w = workload(4, 4, vec![layer]);
        w.validate().unwrap();
        let g = extract_flows(&w).unwrap();
        let got: Vec<(Provenance, u32, u64, u64)> = g
            .flows
            .iter()
            .zip(&g.tags)
            .map(|(f, t)| (t.provenance, t.iteration, f.ready_time, f.qos_deadline))
            .collect();
        use Provenance::*;
        assert_eq!(
            got,
            vec![
                (Weights, 0, 0, 100),
                (Inputs, 0, 0, 100),
                (Weights, 1, 100, 200),
                (Inputs, 1, 100, 200),
                (PsumReduce, 0, 200, 300),
                (PsumReduce, 1, 300, 400),
                (OutputSpill, 1, 400, 500),
            ]
        );
        assert!(g.flows.iter().enumerate().all(|(i, f)| f.id == i as u32));
    }

    #[test]
    fn dangling_upstream_is_rejected() {
        let mut layer = LayerSpec::new("l", 1);
        layer.region = vec![n(0, 0)];
        layer.upstream = Some("ghost".into());
        let mut w = workload(2, 2, vec![layer]);
        assert!(matches!(w.validate(), Err(TrafficError::DanglingUpstream { .. })));
    }

    #[test]
    fn overlapping_regions_rejected() {
        let mut a = LayerSpec::new("a", 1);
        a.region = vec![n(0, 0)];
        let mut b = LayerSpec::new("b", 1);
        b.region = vec![n(0, 0)];
        let mut w = workload(2, 2, vec![a, b]);
        assert!(matches!(w.validate(), Err(TrafficError::RegionOverlap { .. })));
    }

    #[test]
    fn qos_slack_examples() {
        let mut layer = LayerSpec::new("l", 1);
        layer.region = vec![n(0, 0)];
        let mut w = workload(2, 2, vec![layer]);
        w.validate().unwrap();
        let mut f = extract_flows(&w).unwrap().flows[0].clone();
        f.qos_deadline = 10;
        assert_eq!(qos_slack(&f, 4), 6);
        assert_eq!(qos_slack(&f, 10), 0);
        f.qos_deadline = 5;
        assert_eq!(qos_slack(&f, 9), -4);
    }

    fn arb_layers() -> impl Strategy<Value = Vec<(usize, u64, u64, u64, u32, u64)>> {
        prop::collection::vec((1usize..6, 1u64..5000, 1u64..5000, 1u64..5000, 1u32..4, 1u64..500), 1..5)
    }

    proptest! {
        #[test]
        fn extraction_invariants(specs in arb_layers()) {
            let layers: Vec<LayerSpec> = specs.iter().enumerate().map(|(i, &(t, w, inp, out, it, c))| {
                let mut l = LayerSpec::new(format!("l{i}"), t);
                l.weight_tile_bits = w;
                l.input_tile_bits = inp;
                l.output_tile_bits = out;
                l.iterations = it;
                l.compute_slots_per_iteration = c;
                l
            }).collect();
            let mut w = place_regions(workload(8, 8, layers)).unwrap();
            w.validate().unwrap();
            let g = extract_flows(&w).unwrap();
            let g2 = extract_flows(&w).unwrap();
            prop_assert_eq!(&g, &g2);
            prop_assert!(g.flows.windows(2).all(|p| p[0].ready_time <= p[1].ready_time));
            let mc_bits = mc_injected_bits(&g);
            for (li, layer) in w.layers.iter().enumerate() {
                let expect = layer.iterations as u64 * (layer.weight_tile_bits + layer.input_tile_bits) * layer.region.len() as u64;
                prop_assert_eq!(mc_bits.get(&li).copied().unwrap_or(0), expect);
            }
            for (f, t) in g.flows.iter().zip(&g.tags) {
                let layer = &w.layers[t.layer];
                for d in &f.destinations {
                    prop_assert!(layer.region.contains(d) || (f.dst_port == LocalPort::Mc && w.mesh.is_mc(*d)));
                }
                if f.kind == PatternKind::Reduce {
                    prop_assert_eq!(f.destinations[0], layer.reduction_tile.unwrap());
                }
                prop_assert!(f.ready_time <= f.qos_deadline);
            }
        }
    }
}
