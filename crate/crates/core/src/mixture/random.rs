//! Random mixture generator for property suites.
//!
//! Generated mixtures respect the wave order in every component and are
//! well formed: a vertex whose parent set differs between components has
//! every mixture vertex as a parent in every component, while all other
//! vertices share one parent set across components.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use super::MixtureGraph;
use crate::cim::WaveAssignment;
use crate::error::Result;
use crate::graph::{Dag, Role, Vertex};

#[derive(Debug, Clone)]
pub struct RandomMixtureConfig {
    pub observed: RangeInclusive<usize>,
    pub latents: RangeInclusive<usize>,
    pub selection: RangeInclusive<usize>,
    pub components: RangeInclusive<usize>,
    pub mixture_vertices: RangeInclusive<usize>,
    pub n_waves: u32,
    /// Probability of each admissible directed edge.
    pub edge_prob: f64,
    /// Probability that a vertex changes its parents across components.
    pub varying_prob: f64,
    /// Probability of an extra mixture edge into a non-varying vertex.
    pub extra_t_edge_prob: f64,
}

impl Default for RandomMixtureConfig {
    fn default() -> Self {
        RandomMixtureConfig {
            observed: 3..=10,
            latents: 0..=2,
            selection: 0..=1,
            components: 2..=3,
            mixture_vertices: 1..=2,
            n_waves: 2,
            edge_prob: 0.3,
            varying_prob: 0.4,
            extra_t_edge_prob: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomMixture {
    pub graph: MixtureGraph,
    pub waves: WaveAssignment,
    /// Base-indexed: vertex changes parents across components.
    pub varying: Vec<bool>,
}

pub fn random_mixture<R: Rng + ?Sized>(cfg: &RandomMixtureConfig, rng: &mut R) -> Result<RandomMixture> {
    let n_obs = rng.random_range(cfg.observed.clone());
    let n_lat = rng.random_range(cfg.latents.clone());
    let n_sel = rng.random_range(cfg.selection.clone());
    let q = rng.random_range(cfg.components.clone());
    let n_t = rng.random_range(cfg.mixture_vertices.clone());
    let w = cfg.n_waves.max(1);

    let mut vertices = Vec::new();
    // every wave gets at least one observed vertex when possible
    let mut obs_waves: Vec<u32> = (0..n_obs).map(|k| if (k as u32) < w { k as u32 + 1 } else { rng.random_range(1..=w) }).collect();
    obs_waves.sort_unstable();
    for (k, &wave) in obs_waves.iter().enumerate() {
        vertices.push(Vertex::observed(format!("O{}", k + 1), Some(wave)));
    }
    let mut slot: Vec<u32> = obs_waves.clone();
    for k in 0..n_lat {
        vertices.push(Vertex::new(format!("L{}", k + 1), Role::Latent));
        slot.push(rng.random_range(1..=w));
    }
    for k in 0..n_sel {
        vertices.push(Vertex::new(format!("S{}", k + 1), Role::Selection));
        slot.push(rng.random_range(1..=w));
    }
    let n_x = vertices.len();
    let t_names: Vec<String> = (0..n_t).map(|k| format!("T{}", k + 1)).collect();
    for name in &t_names {
        vertices.push(Vertex::new(name.clone(), Role::Mixture));
    }

    // global order: by slot wave, random within a wave
    let mut order: Vec<usize> = (0..n_x).collect();
    order.shuffle(rng);
    order.sort_by_key(|&v| slot[v]);

    let varying: Vec<bool> = (0..n_x).map(|_| rng.random_bool(cfg.varying_prob)).collect();
    let mut shared = Vec::new();
    for (pos, &v) in order.iter().enumerate() {
        if varying[v] {
            continue;
        }
        for &u in &order[..pos] {
            if rng.random_bool(cfg.edge_prob) {
                shared.push((u, v));
            }
        }
        for t in n_x..n_x + n_t {
            if rng.random_bool(cfg.extra_t_edge_prob) {
                shared.push((t, v));
            }
        }
    }

    let mut comps = Vec::with_capacity(q);
    for _ in 0..q {
        let mut dag = Dag::from_edges(vertices.clone(), shared.iter().copied())?;
        for &v in order.iter().filter(|&&v| varying[v]) {
            for t in n_x..n_x + n_t {
                dag.add_edge(t, v)?;
            }
            let mut cands: Vec<usize> = (0..n_x).filter(|&u| u != v && slot[u] <= slot[v]).collect();
            cands.shuffle(rng);
            for u in cands {
                if rng.random_bool(cfg.edge_prob) {
                    // skip edges that would close a cycle in this component
                    let _ = dag.add_edge(u, v);
                }
            }
        }
        comps.push(dag);
    }

    let names: Vec<&str> = t_names.iter().map(String::as_str).collect();
    let graph = MixtureGraph::build(&comps, &names)?;
    let waves = WaveAssignment::from_vertices(graph.base())?;
    let mut flags = varying;
    flags.extend(std::iter::repeat_n(false, n_t));
    Ok(RandomMixture { graph, waves, varying: flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_waves_and_roles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let rm = random_mixture(&RandomMixtureConfig::default(), &mut rng).unwrap();
            let m = &rm.graph;
            let f = m.fused();
            let obs = m.observed();
            for &a in &obs {
                for &b in &obs {
                    let (wa, wb) = (m.base()[a].wave.unwrap(), m.base()[b].wave.unwrap());
                    if wa > wb {
                        assert!(!f.ancestors(&[b].into()).unwrap().contains(&a));
                    }
                }
            }
            for t in m.mixture_vertices() {
                assert!(f.parents(t).is_empty());
            }
            assert!(rm.waves.n_waves() >= 2 || obs.len() < 2);
        }
    }

    #[test]
    fn stationary_vertices_share_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let rm = random_mixture(&RandomMixtureConfig::default(), &mut rng).unwrap();
            let m = &rm.graph;
            let ts = m.mixture_vertices();
            for v in 0..m.base().len() {
                if ts.contains(&v) {
                    continue;
                }
                let pa: Vec<&[usize]> = m.components().iter().map(|c| c.parents(v)).collect();
                if rm.varying[v] {
                    for p in &pa {
                        assert!(ts.iter().all(|t| p.contains(t)));
                    }
                } else {
                    assert!(pa.windows(2).all(|w| w[0] == w[1]));
                }
            }
        }
    }
}
