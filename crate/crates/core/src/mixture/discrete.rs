//! Discrete mixtures with exactly enumerated joint distributions.
//!
//! Each mixture vertex `T` is a root with its own categorical law. The
//! assignment `t` of all mixture vertices picks a component `c(t)`, and
//! every other vertex is binary with a conditional table per component.

use rand::Rng;

use super::random::{random_mixture, RandomMixtureConfig};
use super::MixtureGraph;
use crate::ci::JointTable;
use crate::error::{Error, Result};
use crate::graph::Digraph;

#[derive(Debug, Clone)]
pub struct DiscreteMixture {
    pub graph: MixtureGraph,
    /// Base indices of the mixture vertices, with their cardinalities.
    t: Vec<usize>,
    t_cards: Vec<usize>,
    t_probs: Vec<Vec<f64>>,
    /// Component selected by each joint mixture assignment (mixed radix,
    /// first mixture vertex slowest).
    component_of: Vec<usize>,
    /// `cpt[j][v][config]`: `P(v = 1 | parents in component j)`.
    cpt: Vec<Vec<Vec<f64>>>,
}

/// Draws a random well-formed binary mixture with 3 to 5 non-mixture
/// vertices and at most six binary variables overall.
///
/// Layouts: one mixture vertex with `q` values (`c(t) = t`), or two binary
/// mixture vertices with `c = t1 + t2` (q = 3) or `c = t1` (q = 2).
pub fn random_discrete_mixture<R: Rng + ?Sized>(rng: &mut R) -> Result<DiscreteMixture> {
    let two_t = rng.random_bool(0.5);
    let q = rng.random_range(2..=3);
    let cfg = RandomMixtureConfig {
        observed: if two_t { 3..=4 } else { 3..=5 },
        latents: 0..=0,
        selection: 0..=0,
        components: q..=q,
        mixture_vertices: if two_t { 2..=2 } else { 1..=1 },
        n_waves: 1,
        edge_prob: 0.4,
        varying_prob: 0.5,
        extra_t_edge_prob: 0.15,
    };
    let rm = random_mixture(&cfg, rng)?;
    let (t_cards, component_of) = if two_t {
        let map = if q == 3 { vec![0, 1, 1, 2] } else { vec![0, 0, 1, 1] };
        (vec![2, 2], map)
    } else {
        (vec![q], (0..q).collect())
    };
    let t: Vec<usize> = rm.graph.mixture_vertices().into_iter().collect();
    let t_probs: Vec<Vec<f64>> = t_cards
        .iter()
        .map(|&k| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();

    let nb = rm.graph.base().len();
    let mut cpt = vec![vec![Vec::new(); nb]; q];
    for v in 0..nb {
        if t.contains(&v) {
            continue;
        }
        let size = |j: usize| -> usize {
            rm.graph.components()[j].parents(v).iter().map(|&p| card_of(&t, &t_cards, p)).product()
        };
        if rm.varying[v] {
            for (j, tables) in cpt.iter_mut().enumerate() {
                tables[v] = (0..size(j)).map(|_| rng.random_range(0.05..0.95)).collect();
            }
        } else {
            let shared: Vec<f64> = (0..size(0)).map(|_| rng.random_range(0.05..0.95)).collect();
            for tables in cpt.iter_mut() {
                tables[v] = shared.clone();
            }
        }
    }
    Ok(DiscreteMixture { graph: rm.graph, t, t_cards, t_probs, component_of, cpt })
}

fn card_of(t: &[usize], t_cards: &[usize], v: usize) -> usize {
    t.iter().position(|&x| x == v).map_or(2, |k| t_cards[k])
}

impl DiscreteMixture {
    /// Exact joint distribution over the non-mixture base vertices, in base
    /// order, with the mixture vertices summed out.
    pub fn observed_joint(&self) -> Result<JointTable> {
        let nb = self.graph.base().len();
        let xs: Vec<usize> = (0..nb).filter(|v| !self.t.contains(v)).collect();
        if xs.len() > 14 {
            return Err(Error::invalid("joint table too large for exact enumeration"));
        }
        let cells = 1usize << xs.len();
        let mut probs = vec![0.0; cells];
        let n_t: usize = self.t_cards.iter().product();
        let mut value = vec![0usize; nb];
        for tcode in 0..n_t {
            let mut rem = tcode;
            let mut pt = 1.0;
            for k in (0..self.t.len()).rev() {
                let tv = rem % self.t_cards[k];
                rem /= self.t_cards[k];
                value[self.t[k]] = tv;
                pt *= self.t_probs[k][tv];
            }
            let j = self.component_of[tcode];
            let comp = &self.graph.components()[j];
            for cell in 0..cells {
                // first listed vertex is the most significant bit
                for (pos, &x) in xs.iter().enumerate() {
                    value[x] = (cell >> (xs.len() - 1 - pos)) & 1;
                }
                let mut p = pt;
                for &x in &xs {
                    let mut cfg = 0usize;
                    for &pa in comp.parents(x) {
                        cfg = cfg * card_of(&self.t, &self.t_cards, pa) + value[pa];
                    }
                    let p1 = self.cpt[j][x][cfg];
                    p *= if value[x] == 1 { p1 } else { 1.0 - p1 };
                }
                probs[cell] += p;
            }
        }
        let labels = xs.iter().map(|&x| self.graph.label(x).to_string()).collect();
        JointTable::new(labels, vec![2; xs.len()], probs, 1e-9)
    }

    /// Base indices of the non-mixture vertices, matching the joint table order.
    pub fn observed_vertices(&self) -> Vec<usize> {
        (0..self.graph.base().len()).filter(|v| !self.t.contains(v)).collect()
    }
}
