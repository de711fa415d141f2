//! Evolutionary search over intermediate-node sequences for the long,
//! one-to-one leg of a collective.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{expand_intermediates, loop_erase, ChannelLoads};
use crate::error::RoutingError;
use crate::model::{manhattan, MeshTopology, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LoadFitness {
    /// Heaviest channel on the path, counting this flow.
    #[default]
    MaxLoad,
    /// Sum of channel loads along the path, counting this flow.
    SumLoad,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EaParams {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub max_intermediate_nodes: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub fitness: LoadFitness,
    /// Stop after this many generations without improvement.
    pub stall_generations: usize,
}

impl Default for EaParams {
    fn default() -> Self {
        Self {
            population_size: 64,
            generations: 100,
            mutation_rate: 0.1,
            max_intermediate_nodes: 2,
            rng_seed: 0,
            fitness: LoadFitness::MaxLoad,
            stall_generations: 20,
        }
    }
}

impl EaParams {
    pub fn validate(&self) -> Result<(), RoutingError> {
        if self.population_size < 2 {
            return Err(RoutingError::InvalidEaParams("population_size must be at least 2"));
        }
        if self.generations < 1 {
            return Err(RoutingError::InvalidEaParams("generations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(RoutingError::InvalidEaParams("mutation_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

type Genome = Vec<NodeId>;
/// Lower is better: load objective first, then hop count.
type Fitness = (u64, usize);

fn fitness_of(path: &[NodeId], loads: &ChannelLoads, flits: u64, mode: LoadFitness) -> Fitness {
    let per_hop = path.windows(2).map(|w| loads.get_link(w[0], w[1]) + flits);
    let load = match mode {
        LoadFitness::MaxLoad => per_hop.max().unwrap_or(0),
        LoadFitness::SumLoad => per_hop.sum(),
    };
    (load, path.len() - 1)
}

/// Search for a load-balanced path `src -> dst` built from X-Y legs between
/// intermediate nodes. Population slot 0 always holds the plain X-Y genome.
pub fn ea_route_phase1(
    mesh: &MeshTopology,
    src: NodeId,
    dst: NodeId,
    flits: u64,
    existing_loads: &ChannelLoads,
    params: &EaParams,
) -> Result<Vec<NodeId>, RoutingError> {
    params.validate()?;
    let plain = loop_erase(expand_intermediates(src, dst, &[]));
    if params.max_intermediate_nodes == 0 || src == dst {
        return Ok(plain);
    }

    // Genes come from the src-dst bounding box grown by one ring.
    let x0 = src.x.min(dst.x).saturating_sub(1);
    let y0 = src.y.min(dst.y).saturating_sub(1);
    let x1 = (src.x.max(dst.x) + 1).min(mesh.width - 1);
    let y1 = (src.y.max(dst.y) + 1).min(mesh.height - 1);
    let pool: Vec<NodeId> = (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| NodeId::new(x, y))).collect();

    let hops = manhattan(src, dst) as usize;
    let bound: Fitness = match params.fitness {
        LoadFitness::MaxLoad => (flits, hops),
        LoadFitness::SumLoad => (flits * hops as u64, hops),
    };

    let mut cache: HashMap<Genome, (Fitness, Vec<NodeId>)> = HashMap::new();
    let mut eval = |g: &Genome| -> Fitness {
        if let Some((f, _)) = cache.get(g) {
            return *f;
        }
        let path = loop_erase(expand_intermediates(src, dst, g));
        let f = fitness_of(&path, existing_loads, flits, params.fitness);
        cache.insert(g.clone(), (f, path));
        f
    };

    let mut best: (Fitness, Genome) = (eval(&Vec::new()), Vec::new());
    if best.0 <= bound {
        return Ok(plain);
    }

    let seed = params.rng_seed ^ ((src.x as u64) << 48 | (src.y as u64) << 32 | (dst.x as u64) << 16 | dst.y as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.max_intermediate_nodes;
    let random_genome = |rng: &mut ChaCha8Rng| -> Genome {
        let len = rng.gen_range(1..=k);
        (0..len).map(|_| *pool.choose(rng).unwrap()).collect()
    };

    let mut population: Vec<Genome> = vec![Vec::new()];
    while population.len() < params.population_size {
        population.push(random_genome(&mut rng));
    }

    let mut stall = 0;
    for _ in 0..params.generations {
        let mut scored: Vec<(Fitness, usize)> = population.iter().enumerate().map(|(i, g)| (eval(g), i)).collect();
        scored.sort();
        let (gen_best, gen_idx) = scored[0];
        if gen_best < best.0 {
            best = (gen_best, population[gen_idx].clone());
            stall = 0;
        } else {
            stall += 1;
        }
        if best.0 <= bound || stall >= params.stall_generations {
            break;
        }

        let ranked: Vec<Genome> = scored.iter().map(|&(_, i)| population[i].clone()).collect();
        let mut next: Vec<Genome> = vec![Vec::new(), best.1.clone()];
        let tournament = |rng: &mut ChaCha8Rng| -> &Genome {
            let a = rng.gen_range(0..ranked.len());
            let b = rng.gen_range(0..ranked.len());
            &ranked[a.min(b)]
        };
        while next.len() < params.population_size {
            let pa = tournament(&mut rng).clone();
            let pb = tournament(&mut rng).clone();
            let cut_a = rng.gen_range(0..=pa.len());
            let cut_b = rng.gen_range(0..=pb.len());
            let mut child: Genome = pa[..cut_a].iter().chain(&pb[cut_b..]).copied().collect();
            child.truncate(k);
            for gene in child.iter_mut() {
                if rng.gen_bool(params.mutation_rate) {
                    *gene = *pool.choose(&mut rng).unwrap();
                }
            }
            if rng.gen_bool(params.mutation_rate) {
                if child.len() < k && (child.is_empty() || rng.gen_bool(0.5)) {
                    let at = rng.gen_range(0..=child.len());
                    child.insert(at, *pool.choose(&mut rng).unwrap());
                } else if !child.is_empty() {
                    let at = rng.gen_range(0..child.len());
                    child.remove(at);
                }
            }
            next.push(child);
        }
        population = next;
    }

    Ok(cache.remove(&best.1).map(|(_, p)| p).unwrap_or(plain))
}
