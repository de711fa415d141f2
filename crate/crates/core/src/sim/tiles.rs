//! Double-buffered tile pipeline driven by observed flow arrivals.
//!
//! Iteration `i` of a tile starts at the latest of its nominal start, the end
//! of iteration `i-1`, the arrival of its weights and inputs at this tile, and
//! the departure of the partial sums of iteration `i-2` (which occupy the
//! buffer half it is about to write). Flow timing is taken as given: a stall
//! does not push later flows back.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{NodeId, PatternKind, Provenance, TrafficFlow};
use crate::traffic::{CommunicationGraph, WorkloadSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileReport {
    pub layer: usize,
    pub tile: NodeId,
    pub compute: u64,
    pub stall: u64,
    /// Cycle the last iteration finishes computing.
    pub finish: u64,
    /// Summed per-iteration transmission time over summed compute time.
    pub bounded_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub compute: u64,
    pub stall: u64,
    pub finish: u64,
    pub mean_bounded_ratio: f64,
    pub max_bounded_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TilesReport {
    pub tiles: Vec<TileReport>,
    pub layers: Vec<LayerReport>,
    pub makespan: u64,
    pub total_compute: u64,
    pub total_stall: u64,
    pub mean_bounded_ratio: f64,
    pub max_bounded_ratio: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

/// Run every tile's pipeline. `arrival(flow, node)` is the cycle after the
/// last flit of `flow` reached `node`.
pub fn simulate_tiles(
    workload: &WorkloadSpec,
    graph: &CommunicationGraph,
    arrival: impl Fn(&TrafficFlow, NodeId) -> u64,
) -> TilesReport {
    let timings = match workload.layer_timings() {
        Ok(t) => t,
        Err(_) => return TilesReport::default(),
    };
    // (layer, iteration) -> flow indices
    let mut by_iter: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for (i, tag) in graph.tags.iter().enumerate() {
        by_iter.entry((tag.layer, tag.iteration)).or_default().push(i);
    }
    let empty = Vec::new();

    let mut report = TilesReport::default();
    for (li, layer) in workload.layers.iter().enumerate() {
        let timing = timings[li];
        let mut tiles = Vec::with_capacity(layer.region.len());
        for &tile in &layer.region {
            let mut prev_end = 0u64;
            let mut stall = 0u64;
            let mut transmission = 0u64;
            for it in 0..layer.iterations {
                let nominal = timing.iteration_start(it);
                let earliest = nominal.max(prev_end);
                let mut start = earliest;
                let mut longest = 0u64;
                for &fi in by_iter.get(&(li, it)).unwrap_or(&empty) {
                    let f = &graph.flows[fi];
                    let receives = f.destinations.contains(&tile);
                    let sends = f.sources.contains(&tile);
                    if !receives && !sends {
                        continue;
                    }
                    let done = if receives {
                        arrival(f, tile)
                    } else {
                        f.destinations.iter().map(|&d| arrival(f, d)).max().unwrap_or(f.ready_time)
                    };
                    longest = longest.max(done.saturating_sub(f.ready_time));
                    let prefetch = matches!(
                        graph.tags[fi].provenance,
                        Provenance::Weights | Provenance::Inputs | Provenance::InterLayer
                    );
                    if prefetch && receives {
                        start = start.max(done);
                    }
                }
                if it >= 2 {
                    for &fi in by_iter.get(&(li, it - 2)).unwrap_or(&empty) {
                        let f = &graph.flows[fi];
                        if f.kind == PatternKind::Reduce && f.sources.contains(&tile) {
                            start = start.max(arrival(f, f.destinations[0]));
                        }
                    }
                }
                transmission += longest;
                stall += start - earliest;
                prev_end = start + timing.compute;
            }
            let compute = layer.iterations as u64 * timing.compute;
            let ratio = if compute == 0 { 0.0 } else { transmission as f64 / compute as f64 };
            tiles.push(TileReport { layer: li, tile, compute, stall, finish: prev_end, bounded_ratio: ratio });
        }
        report.layers.push(LayerReport {
            name: layer.name.clone(),
            compute: tiles.iter().map(|t| t.compute).sum(),
            stall: tiles.iter().map(|t| t.stall).sum(),
            finish: tiles.iter().map(|t| t.finish).max().unwrap_or(0),
            mean_bounded_ratio: mean(tiles.iter().map(|t| t.bounded_ratio)),
            max_bounded_ratio: max(tiles.iter().map(|t| t.bounded_ratio)),
        });
        report.tiles.extend(tiles);
    }
    report.makespan = report.tiles.iter().map(|t| t.finish).max().unwrap_or(0);
    report.total_compute = report.tiles.iter().map(|t| t.compute).sum();
    report.total_stall = report.tiles.iter().map(|t| t.stall).sum();
    report.mean_bounded_ratio = mean(report.tiles.iter().map(|t| t.bounded_ratio));
    report.max_bounded_ratio = max(report.tiles.iter().map(|t| t.bounded_ratio));
    report
}
