use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tilenoc::hwconfig::Framing;
use tilenoc::metrics::{plan_tdm, run_tdm};
use tilenoc::model::*;
use tilenoc::routing::{BaselineRouting, RoutingOptions};
use tilenoc::sim::*;

fn n(x: u16, y: u16) -> NodeId {
    NodeId { x, y }
}

/// Slot cost matching the default scheduled router (two router cycles plus one wire cycle).
fn mesh(w: u16, h: u16, wire: u32) -> MeshTopology {
    MeshTopology::with_mcs(w, h, default_mc_nodes(w, h), wire, 3).unwrap()
}

fn unicast(id: FlowId, volume: u64, src: NodeId, dst: NodeId, ready: u64, deadline: u64) -> TrafficFlow {
    TrafficFlow {
        id,
        kind: PatternKind::Unicast,
        volume,
        sources: vec![src],
        destinations: vec![dst],
        ready_time: ready,
        qos_deadline: deadline,
        src_port: LocalPort::Tile,
        dst_port: LocalPort::Tile,
    }
}

/// Mixed unicasts and multicasts with distinct endpoints.
fn random_flows(mesh: &MeshTopology, seed: u64, count: u32) -> Vec<TrafficFlow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| n(rng.gen_range(0..mesh.width), rng.gen_range(0..mesh.height));
    (0..count)
        .map(|id| {
            let src = pick(&mut rng);
            let mut dsts = Vec::new();
            let want = if rng.gen_bool(0.3) { rng.gen_range(2..5) } else { 1 };
            while dsts.len() < want {
                let d = pick(&mut rng);
                if d != src && !dsts.contains(&d) {
                    dsts.push(d);
                }
            }
            let ready = rng.gen_range(0..200);
            let mut f = unicast(id, mesh.wire_width as u64 * rng.gen_range(1..40), src, dsts[0], ready, ready + 500);
            if dsts.len() > 1 {
                f.kind = PatternKind::Multicast;
                f.destinations = dsts;
            }
            f
        })
        .collect()
}

fn delivered_everything(flows: &[TrafficFlow], sim: &SimResult) {
    for f in flows {
        let t = &sim.flows[&f.id];
        assert!(t.flits_injected > 0, "flow {} never injected", f.id);
        assert!(t.tail_arrival > f.ready_time);
        assert!(t.head_arrival <= t.tail_arrival);
        assert_eq!(t.dest_arrival.len(), f.destinations.len(), "flow {}", f.id);
    }
}

#[test]
fn heavy_random_traffic_drains_under_every_routing() {
    let mesh = mesh(6, 6, 256);
    let flows = random_flows(&mesh, 11, 120);
    for routing in [BaselineRouting::Dor, BaselineRouting::Xyyx, BaselineRouting::Romm, BaselineRouting::Mad] {
        let params = BaselineParams { routing, seed: 3, ..BaselineParams::default() };
        let sim = simulate_baseline(&mesh, &flows, &params).unwrap_or_else(|e| panic!("{routing:?}: {e}"));
        delivered_everything(&flows, &sim);
        let stats = sim.baseline.as_ref().unwrap();
        assert!(stats.max_vc_occupancy <= params.buffer_depth);
        assert!(stats.max_credit <= params.buffer_depth);
    }
}

#[test]
fn tiny_buffers_still_drain() {
    let mesh = mesh(5, 5, 128);
    let flows = random_flows(&mesh, 5, 60);
    for routing in [BaselineRouting::Mad, BaselineRouting::Romm] {
        let params = BaselineParams { routing, vcs: 2, buffer_depth: 1, ..BaselineParams::default() };
        let sim = simulate_baseline(&mesh, &flows, &params).unwrap();
        delivered_everything(&flows, &sim);
        assert!(sim.baseline.unwrap().max_vc_occupancy <= 1);
    }
}

#[test]
fn same_seed_same_result() {
    let mesh = mesh(6, 6, 256);
    let flows = random_flows(&mesh, 2, 80);
    for routing in [BaselineRouting::Romm, BaselineRouting::Mad] {
        let params = BaselineParams { routing, seed: 9, ..BaselineParams::default() };
        let a = serde_json::to_string(&simulate_baseline(&mesh, &flows, &params).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate_baseline(&mesh, &flows, &params).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    let opts = RoutingOptions::default();
    let a = run_tdm(&mesh, &flows, &opts, Framing::Chunk, &MetroParams::default()).unwrap();
    let b = run_tdm(&mesh, &flows, &opts, Framing::Chunk, &MetroParams::default()).unwrap();
    assert_eq!(serde_json::to_string(&a.sim).unwrap(), serde_json::to_string(&b.sim).unwrap());
}

#[test]
fn sim_result_round_trips_through_json() {
    let mesh = mesh(4, 4, 256);
    let flows = random_flows(&mesh, 8, 20);
    let sim = simulate_baseline(&mesh, &flows, &BaselineParams { trace: true, ..BaselineParams::default() }).unwrap();
    assert!(!sim.trace.is_empty());
    let back: SimResult = serde_json::from_str(&serde_json::to_string(&sim).unwrap()).unwrap();
    assert_eq!(back, sim);

    let run = run_tdm(&mesh, &flows, &RoutingOptions::default(), Framing::Chunk, &MetroParams::default()).unwrap();
    let back: SimResult = serde_json::from_str(&serde_json::to_string(&run.sim).unwrap()).unwrap();
    assert_eq!(back, run.sim);
}

#[test]
fn scheduled_fabric_never_blocks_and_matches_the_plan() {
    let mesh = mesh(6, 6, 512);
    for seed in 0..10 {
        let flows = random_flows(&mesh, seed, 50);
        let run = run_tdm(&mesh, &flows, &RoutingOptions::default(), Framing::Chunk, &MetroParams::default()).unwrap();
        delivered_everything(&flows, &run.sim);
        assert_eq!(run.sim.blocked_flit_cycles, 0);
        for f in &flows {
            assert_eq!(
                run.sim.flows[&f.id].tail_arrival, run.schedule.flows[&f.id].completion,
                "seed {seed} flow {}",
                f.id
            );
        }
    }
}

#[test]
fn oversized_flow_is_late_by_at_least_its_excess() {
    let mesh = mesh(4, 4, 256);
    let flits = 100;
    let window = 20;
    let flows = vec![unicast(0, 256 * flits, n(0, 0), n(3, 0), 0, window)];
    let plan = plan_tdm(&mesh, &flows, &RoutingOptions::default(), Framing::Chunk, None).unwrap();
    let late = plan.schedule.flows[&0].lateness;
    assert!(late >= flits - window, "lateness {late}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flits_are_conserved(seed in 0u64..10_000, count in 1u32..30) {
        let mesh = mesh(5, 4, 256);
        let flows = random_flows(&mesh, seed, count);
        let base = simulate_baseline(&mesh, &flows, &BaselineParams { routing: BaselineRouting::Mad, seed, ..BaselineParams::default() }).unwrap();
        let run = run_tdm(&mesh, &flows, &RoutingOptions::default(), Framing::Chunk, &MetroParams::default()).unwrap();
        for sim in [&base, &run.sim] {
            for f in &flows {
                let t = &sim.flows[&f.id];
                let fanout = f.destinations.len() as u64;
                // Each copy that reaches a destination left the source once.
                prop_assert!(t.flits_ejected >= t.flits_injected);
                prop_assert!(t.flits_ejected <= t.flits_injected * fanout);
            }
            let ejected: u64 = sim.flows.values().map(|t| t.flits_ejected).sum();
            prop_assert!(ejected > 0);
        }
    }
}
