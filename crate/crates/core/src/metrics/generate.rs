//! Seeded synthetic workload generator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::workload_file::{LayerEntry, MeshSection, WorkloadFile, FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenOptions {
    pub seed: u64,
    pub width: u16,
    pub height: u16,
    pub layers: usize,
    pub wire_widths: Vec<u32>,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { seed: 0, width: 8, height: 8, layers: 4, wire_widths: vec![256, 512, 1024, 2048] }
    }
}

/// Layers get power-of-two tile counts, largest first, and form a chain
/// with occasional independent heads.
pub fn gen_workload(opts: &GenOptions) -> WorkloadFile {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let capacity = opts.width as usize * opts.height as usize;
    let mut sizes: Vec<usize> = Vec::new();
    let mut left = capacity;
    for _ in 0..opts.layers {
        if left == 0 {
            break;
        }
        let max_exp = (usize::BITS - 1 - left.leading_zeros()).min(5);
        let size = 1usize << rng.gen_range(0..=max_exp);
        sizes.push(size);
        left -= size;
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));

    let mut layers = Vec::with_capacity(sizes.len());
    for (i, tiles) in sizes.into_iter().enumerate() {
        let upstream = (i > 0 && rng.gen_bool(0.7)).then(|| format!("layer{}", i - 1));
        layers.push(LayerEntry {
            name: format!("layer{i}"),
            tiles,
            iterations: rng.gen_range(2..=4),
            weight_bits: 256 * rng.gen_range(1..=16),
            input_bits: 256 * rng.gen_range(1..=16),
            output_bits: 256 * rng.gen_range(1..=8),
            compute: 50 * rng.gen_range(2..=20),
            upstream,
            region: None,
            reduction_tile: None,
            mc: None,
        });
    }
    WorkloadFile {
        version: FORMAT_VERSION,
        name: format!("synthetic-{}", opts.seed),
        description: "Synthetic workload, generated".into(),
        wire_widths: opts.wire_widths.clone(),
        mesh: MeshSection { width: opts.width, height: opts.height, mc: None },
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_workloads_are_valid_and_reproducible() {
        for seed in 0..20 {
            let o = GenOptions { seed, ..GenOptions::default() };
            let w = gen_workload(&o);
            assert_eq!(w, gen_workload(&o));
            let parsed = WorkloadFile::parse(&w.to_toml()).unwrap();
            assert_eq!(parsed, w);
            let sizes: Vec<usize> = w.layers.iter().map(|l| l.tiles).collect();
            assert!(sizes.windows(2).all(|p| p[0] >= p[1]));
            assert!(sizes.iter().all(|s| s.is_power_of_two()));
        }
    }
}
