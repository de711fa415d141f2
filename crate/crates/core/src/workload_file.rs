//! Versioned TOML workload description.
//!
//! ```toml
//! version = 1
//! name = "pipeline"
//! wire_widths = [256, 512]
//!
//! [mesh]
//! width = 8
//! height = 8
//! mc = [[0, 3], [7, 4]]      # optional; defaults to the middle of each edge
//!
//! [[layer]]
//! name = "conv1"
//! tiles = 16
//! iterations = 4
//! weight_bits = 4096
//! input_bits = 2048
//! output_bits = 1024
//! compute = 400
//! upstream = "conv0"         # optional
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{default_mc_nodes, MeshTopology, NodeId};
use crate::traffic::{place_regions, LayerSpec, WorkloadSpec};

pub const FORMAT_VERSION: u32 = 1;

/// Cycles a flit needs to cross one hop of the scheduled fabric.
pub const DEFAULT_SLOT_CYCLES: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub width: u16,
    pub height: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<Vec<[u16; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    pub tiles: usize,
    pub iterations: u32,
    pub weight_bits: u64,
    pub input_bits: u64,
    pub output_bits: u64,
    /// Compute cycles per iteration.
    pub compute: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upstream: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<[u16; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction_tile: Option<[u16; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<[u16; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wire_widths: Vec<u32>,
    pub mesh: MeshSection,
    #[serde(default, rename = "layer")]
    pub layers: Vec<LayerEntry>,
}

fn node(p: [u16; 2]) -> NodeId {
    NodeId::new(p[0], p[1])
}

impl WorkloadFile {
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: Option<u32>,
        }
        let probe: Probe = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match probe.version {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(Error::UnsupportedVersion(v)),
            None => return Err(Error::Parse("missing `version`".into())),
        }
        let file: WorkloadFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.to_spec(file.wire_widths.first().copied().unwrap_or(256))?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("workload file serializes")
    }

    /// Placed and validated workload at one wire width.
    pub fn to_spec(&self, wire_width: u32) -> Result<WorkloadSpec> {
        let mcs = match &self.mesh.mc {
            Some(list) => list.iter().copied().map(node).collect(),
            None => default_mc_nodes(self.mesh.width, self.mesh.height),
        };
        let mesh = MeshTopology::with_mcs(self.mesh.width, self.mesh.height, mcs, wire_width, DEFAULT_SLOT_CYCLES)?;
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut s = LayerSpec::new(l.name.clone(), l.tiles);
                s.iterations = l.iterations;
                s.weight_tile_bits = l.weight_bits;
                s.input_tile_bits = l.input_bits;
                s.output_tile_bits = l.output_bits;
                s.compute_slots_per_iteration = l.compute;
                s.upstream = l.upstream.clone();
                s.region = l.region.as_ref().map(|r| r.iter().copied().map(node).collect()).unwrap_or_default();
                s.reduction_tile = l.reduction_tile.map(node);
                s.mc = l.mc.map(node);
                s
            })
            .collect();
        let mut spec = place_regions(WorkloadSpec { mesh, layers })?;
        spec.validate()?;
        Ok(spec)
    }
}
