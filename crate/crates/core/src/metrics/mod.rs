//! Experiment orchestration: the full pipeline per (wire width, scheme) cell,
//! the cumulative feature ablation, and the metrics they report.

mod generate;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generate::{gen_workload, GenOptions};
pub use report::Format;

use crate::error::{ConfigError, Error, Result, SimError};
use crate::hwconfig::{emit_config, lower_legs, AcceleratorConfig, Framing};
use crate::model::{FlowId, MeshTopology, TrafficFlow};
use crate::routing::{route_flows_except, BaselineRouting, EaParams, RoutePlan, RoutingOptions};
use crate::schedule::{schedule, verify_schedule, InjectionSchedule, Leg, LegKind, Pacing};
use crate::sim::{
    simulate_baseline, simulate_metro, simulate_tiles, BaselineParams, MetroParams, SimResult, TileReport, TilesReport,
};
use crate::traffic::{extract_flows, CommunicationGraph, WorkloadSpec};
use crate::workload_file::WorkloadFile;

/// Transmission time over computation time; above 1 the tile waits on data.
pub fn bounded_ratio(transmission: u64, computation: u64) -> Result<f64> {
    if computation == 0 {
        return Err(Error::ZeroCompute);
    }
    Ok(transmission as f64 / computation as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Slot-scheduled fabric with dual-phase routing and chunk framing.
    Tdm,
    Baseline(BaselineRouting),
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Tdm,
        Scheme::Baseline(BaselineRouting::Dor),
        Scheme::Baseline(BaselineRouting::Xyyx),
        Scheme::Baseline(BaselineRouting::Romm),
        Scheme::Baseline(BaselineRouting::Mad),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Tdm => "tdm",
            Scheme::Baseline(r) => r.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

/// Knobs shared by every cell of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub ea: EaParams,
    pub metro: MetroParams,
    pub baseline: BaselineParams,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl ExperimentOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ea: EaParams { rng_seed: seed, ..EaParams::default() },
            metro: MetroParams::default(),
            baseline: BaselineParams { seed, ..BaselineParams::default() },
        }
    }
}

/// Routes, legs, schedule and configuration for a flow set on the scheduled fabric.
#[derive(Clone, Debug)]
pub struct TdmPlan {
    pub plans: Vec<RoutePlan>,
    pub legs: Vec<Leg>,
    pub schedule: InjectionSchedule,
    pub config: AcceleratorConfig,
}

/// A [`TdmPlan`] replayed cycle by cycle.
#[derive(Clone, Debug)]
pub struct TdmRun {
    pub plans: Vec<RoutePlan>,
    pub legs: Vec<Leg>,
    pub schedule: InjectionSchedule,
    pub config: AcceleratorConfig,
    pub sim: SimResult,
}

/// Route, lower, configure and schedule a flow set.
///
/// Collectives whose tables do not fit a router are carried by source-routed
/// unicasts instead, latest flow first, until every router fits.
pub fn plan_tdm(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    routing: &RoutingOptions,
    framing: Framing,
    mc_bits_per_cycle: Option<u64>,
) -> Result<TdmPlan> {
    let mut unicast_only: BTreeSet<FlowId> = BTreeSet::new();
    let (plans, legs, config) = loop {
        let plans = route_flows_except(mesh, flows, routing, &unicast_only)?;
        let legs = lower_legs(mesh, flows, &plans, framing)?;
        match emit_config(mesh, &legs, framing) {
            Ok(config) => break (plans, legs, config),
            Err(ConfigError::TableOverflow { node, .. }) => {
                let victim = legs
                    .iter()
                    .filter(|l| l.kind == LegKind::Broadcast && l.tree.nodes().any(|n| n == node))
                    .map(|l| l.flow_id)
                    .filter(|id| !unicast_only.contains(id))
                    .max()
                    .expect("an overflowing router holds at least one tree");
                unicast_only.insert(victim);
            }
            Err(e) => return Err(e.into()),
        }
    };
    let pacing = Pacing { wire_width: mesh.wire_width, mc_bits_per_slot: mc_bits_per_cycle };
    let (sched, _) = schedule(flows, &legs, mesh.channel_slot_cost, pacing);
    if let Some(c) = verify_schedule(&sched).into_iter().next() {
        // The greedy placer never double-books; treat it like a runtime conflict.
        return Err(
            SimError::RuntimeConflict { cycle: c.slots.0, channel: c.channel, legs: vec![c.legs.0, c.legs.1] }.into()
        );
    }
    Ok(TdmPlan { plans, legs, schedule: sched, config })
}

/// Plan a flow set and replay it on the scheduled fabric.
pub fn run_tdm(
    mesh: &MeshTopology,
    flows: &[TrafficFlow],
    routing: &RoutingOptions,
    framing: Framing,
    metro: &MetroParams,
) -> Result<TdmRun> {
    let TdmPlan { plans, legs, schedule, config } = plan_tdm(mesh, flows, routing, framing, metro.mc_bits_per_cycle)?;
    let sim = simulate_metro(mesh, flows, &legs, &config, &schedule, metro)?;
    Ok(TdmRun { plans, legs, schedule, config, sim })
}

/// Sum over flows of delivery minus ready time.
pub fn communication_latency(flows: &[TrafficFlow], sim: &SimResult) -> u64 {
    flows.iter().map(|f| sim.flows.get(&f.id).map_or(0, |t| t.tail_arrival.saturating_sub(f.ready_time))).sum()
}

/// Tile pipeline driven by a simulation's per-destination arrivals.
pub fn tiles_from_sim(spec: &WorkloadSpec, graph: &CommunicationGraph, sim: &SimResult) -> TilesReport {
    simulate_tiles(spec, graph, |f, n| {
        sim.flows.get(&f.id).map(|t| t.dest_arrival.get(&n).copied().unwrap_or(t.tail_arrival)).unwrap_or(f.ready_time)
    })
}

/// Tile pipeline with every flow delivered the moment it is ready.
pub fn ideal_tiles(spec: &WorkloadSpec, graph: &CommunicationGraph) -> TilesReport {
    simulate_tiles(spec, graph, |f, _| f.ready_time)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub workload: String,
    pub wire_width: u32,
    pub scheme: String,
    pub flows: usize,
    pub mean_bounded_ratio: f64,
    pub max_bounded_ratio: f64,
    /// Sum over flows of delivery minus ready time, in cycles.
    pub comm_latency: u64,
    pub makespan: u64,
    /// Makespan when every flow arrives instantly.
    pub ideal_makespan: u64,
    pub total_compute: u64,
    pub total_stall: u64,
    pub tiles: Vec<TileReport>,
}

impl CellReport {
    pub fn communication_bound(&self) -> bool {
        self.mean_bounded_ratio > 1.0
    }
}

fn simulate_scheme(
    spec: &WorkloadSpec,
    graph: &CommunicationGraph,
    scheme: Scheme,
    opts: &ExperimentOptions,
) -> Result<SimResult> {
    match scheme {
        Scheme::Tdm => {
            let routing = RoutingOptions { dual_phase: true, ea: Some(opts.ea) };
            Ok(run_tdm(&spec.mesh, &graph.flows, &routing, Framing::Chunk, &opts.metro)?.sim)
        }
        Scheme::Baseline(alg) => {
            let p = BaselineParams { routing: alg, ..opts.baseline };
            Ok(simulate_baseline(&spec.mesh, &graph.flows, &p)?)
        }
    }
}

/// Full pipeline for one cell.
pub fn run_cell(file: &WorkloadFile, wire_width: u32, scheme: Scheme, opts: &ExperimentOptions) -> Result<CellReport> {
    let context = format!("{} @ {} bits, {}", file.name, wire_width, scheme.as_str());
    let inner = || -> Result<CellReport> {
        let spec = file.to_spec(wire_width)?;
        let graph = extract_flows(&spec)?;
        let sim = simulate_scheme(&spec, &graph, scheme, opts)?;
        let tiles = tiles_from_sim(&spec, &graph, &sim);
        let ideal = ideal_tiles(&spec, &graph);
        Ok(CellReport {
            workload: file.name.clone(),
            wire_width,
            scheme: scheme.as_str().to_string(),
            flows: graph.len(),
            mean_bounded_ratio: tiles.mean_bounded_ratio,
            max_bounded_ratio: tiles.max_bounded_ratio,
            comm_latency: communication_latency(&graph.flows, &sim),
            makespan: tiles.makespan,
            ideal_makespan: ideal.makespan,
            total_compute: tiles.total_compute,
            total_stall: tiles.total_stall,
            tiles: tiles.tiles,
        })
    };
    inner().map_err(|e| e.in_cell(context))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Ordered by wire width, then scheme.
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, wire_width: u32, scheme: Scheme) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.wire_width == wire_width && c.scheme == scheme.as_str())
    }

    /// Narrowest swept width at which the scheme's mean bounded ratio is at most 1.
    pub fn min_width_hiding_communication(&self, scheme: Scheme) -> Option<u32> {
        self.cells
            .iter()
            .filter(|c| c.scheme == scheme.as_str() && c.mean_bounded_ratio <= 1.0)
            .map(|c| c.wire_width)
            .min()
    }
}

/// Every (wire width, scheme) cell, run in parallel and merged by coordinates.
pub fn run_comparison(
    file: &WorkloadFile,
    wire_widths: &[u32],
    schemes: &[Scheme],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    if file.layers.is_empty() {
        return Ok(ExperimentReport::default());
    }
    let coords: Vec<(u32, Scheme)> = wire_widths.iter().flat_map(|&w| schemes.iter().map(move |&s| (w, s))).collect();
    let results: Vec<((u32, Scheme), Result<CellReport>)> =
        coords.par_iter().map(|&(w, s)| ((w, s), run_cell(file, w, s, opts))).collect();
    let mut merged: BTreeMap<(u32, Scheme), CellReport> = BTreeMap::new();
    for (key, r) in results {
        merged.insert(key, r?);
    }
    Ok(ExperimentReport { cells: merged.into_values().collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub stage: String,
    pub comm_latency: u64,
    pub makespan: u64,
    /// Fractional latency reduction relative to the previous row.
    pub reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub workload: String,
    pub wire_width: u32,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// Error on the first stage that raised total latency.
    pub fn check_monotone(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if w[1].comm_latency > w[0].comm_latency {
                return Err(Error::AblationNotMonotone {
                    stage: w[1].stage.clone(),
                    before: w[0].comm_latency,
                    after: w[1].comm_latency,
                });
            }
        }
        Ok(())
    }
}

pub const ABLATION_STAGES: [&str; 5] =
    ["baseline", "+injection-control", "+dual-phase", "+ea-balancing", "+chunk-framing"];

/// Packet size used by every packet-framed ablation stage.
pub const ABLATION_PACKET_FLITS: u32 = 8;

/// Add the scheduled fabric's features one at a time, starting from a
/// single-flit-buffer wormhole network on the same two-cycle routers.
pub fn run_ablation_unchecked(
    file: &WorkloadFile,
    wire_width: u32,
    opts: &ExperimentOptions,
) -> Result<AblationReport> {
    let spec = file.to_spec(wire_width)?;
    let graph = extract_flows(&spec)?;
    let mesh = &spec.mesh;
    let flows = &graph.flows;
    let packet = Framing::Packet { payload_flits: ABLATION_PACKET_FLITS };
    let m = opts.metro;

    let mut sims: Vec<SimResult> = Vec::with_capacity(5);
    let plain = BaselineParams {
        // The scheduled fabric's own router: one VC holding a single flit.
        vcs: 1,
        buffer_depth: 1,
        router_cycles: m.router_cycles,
        wire_cycles: m.wire_cycles,
        routing: BaselineRouting::Dor,
        packet_payload_flits: ABLATION_PACKET_FLITS,
        mc_bits_per_cycle: m.mc_bits_per_cycle,
        ..opts.baseline
    };
    sims.push(simulate_baseline(mesh, flows, &plain).map_err(|e| Error::from(e).in_cell("baseline"))?);
    let stages = [
        (RoutingOptions { dual_phase: false, ea: None }, packet),
        (RoutingOptions { dual_phase: true, ea: None }, packet),
        (RoutingOptions { dual_phase: true, ea: Some(opts.ea) }, packet),
        (RoutingOptions { dual_phase: true, ea: Some(opts.ea) }, Framing::Chunk),
    ];
    for (i, (routing, framing)) in stages.iter().enumerate() {
        let run = run_tdm(mesh, flows, routing, *framing, &m).map_err(|e| e.in_cell(ABLATION_STAGES[i + 1]))?;
        sims.push(run.sim);
    }

    let mut rows: Vec<AblationRow> = Vec::new();
    for (i, sim) in sims.iter().enumerate() {
        let lat = communication_latency(flows, sim);
        let reduction = match rows.last() {
            Some(prev) if prev.comm_latency > 0 => 1.0 - lat as f64 / prev.comm_latency as f64,
            _ => 0.0,
        };
        rows.push(AblationRow {
            stage: ABLATION_STAGES[i].to_string(),
            comm_latency: lat,
            makespan: tiles_from_sim(&spec, &graph, sim).makespan,
            reduction,
        });
    }
    Ok(AblationReport { workload: file.name.clone(), wire_width, rows })
}

/// Ablation table, failing if any added feature raised total latency.
pub fn run_ablation(file: &WorkloadFile, wire_width: u32, opts: &ExperimentOptions) -> Result<AblationReport> {
    let r = run_ablation_unchecked(file, wire_width, opts)?;
    r.check_monotone()?;
    Ok(r)
}
