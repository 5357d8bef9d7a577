//! Linear-Gaussian mixture benchmark generator.
//!
//! A random master DAG over `p` variables split into equal waves; the
//! `n`th variable of each wave feeds the `n`th variable of the next. All
//! other edges are dealt into `q` blocks, block `i` being active when the
//! binary mixture variable `Ti` is one.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cim::WaveAssignment;
use crate::error::{Error, Result};
use crate::graph::{Dag, Digraph, Role, Vertex};
use crate::mixture::{ground_truth_endpoints, FusedGraph, GroundTruthMixed, MixtureGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub p: usize,
    pub n_waves: usize,
    pub expected_neighborhood: f64,
    pub q_range: RangeInclusive<usize>,
    /// Coefficient magnitudes; the sign is drawn separately.
    pub coeff_range: (f64, f64),
    pub n_samples: usize,
    pub n_latents_range: RangeInclusive<usize>,
    pub n_selection_range: RangeInclusive<usize>,
    /// Truncation percentile `k` for each selection variable.
    pub truncation_range: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            p: 24,
            n_waves: 3,
            expected_neighborhood: 2.0,
            q_range: 5..=15,
            coeff_range: (0.25, 1.0),
            n_samples: 2000,
            n_latents_range: 0..=2,
            n_selection_range: 0..=2,
            truncation_range: (10.0, 50.0),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_waves == 0 || self.p == 0 || !self.p.is_multiple_of(self.n_waves) {
            return Err(Error::invalid(format!("{} variables cannot be split into {} waves", self.p, self.n_waves)));
        }
        if self.p < 2 || !(self.expected_neighborhood >= 0.0 && self.expected_neighborhood <= (self.p - 1) as f64) {
            return Err(Error::invalid("expected neighbourhood must lie in [0, p - 1]"));
        }
        let (lo, hi) = self.coeff_range;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::invalid("coefficient range must be non-empty and non-negative"));
        }
        let (klo, khi) = self.truncation_range;
        if !(klo >= 0.0 && klo <= khi && khi < 100.0) {
            return Err(Error::invalid("truncation range must lie in [0, 100)"));
        }
        if self.q_range.is_empty() || *self.q_range.start() == 0 {
            return Err(Error::invalid("q range must be non-empty and positive"));
        }
        if self.n_latents_range.is_empty() || self.n_selection_range.is_empty() {
            return Err(Error::invalid("latent and selection ranges must be non-empty"));
        }
        if self.n_latents_range.end() + self.n_selection_range.end() >= self.p {
            return Err(Error::invalid("too many latent and selection variables for p"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be positive"));
        }
        Ok(())
    }

    pub fn wave_size(&self) -> usize {
        self.p / self.n_waves
    }

    pub fn wave_of(&self, v: usize) -> u32 {
        (v / self.wave_size()) as u32 + 1
    }

    pub fn label(v: usize) -> String {
        format!("X{}", v + 1)
    }

    /// The `n`th variable of wave `w` to the `n`th of wave `w + 1`.
    pub fn wave_links(&self) -> BTreeSet<(usize, usize)> {
        let s = self.wave_size();
        (0..self.p - s).map(|v| (v, v + s)).collect()
    }
}

pub type Coefficients = BTreeMap<(usize, usize), f64>;

fn draw_coefficient<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> f64 {
    let (lo, hi) = cfg.coeff_range;
    let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Master DAG over `X1..Xp` with waves assigned in index order. Every
/// forward pair is an edge with probability `ens / (p - 1)`; the wave links
/// are then added.
pub fn random_master_dag<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<(Dag, Coefficients)> {
    cfg.validate()?;
    let p = cfg.p;
    // a random topological order, relabelled so that it is the index order
    // and therefore agrees with the wave blocks
    let vertices: Vec<Vertex> = (0..p).map(|v| Vertex::observed(SynthConfig::label(v), Some(cfg.wave_of(v)))).collect();
    let prob = cfg.expected_neighborhood / (p - 1) as f64;
    let mut coef = Coefficients::new();
    for a in 0..p {
        for b in a + 1..p {
            if rng.random_bool(prob) {
                coef.insert((a, b), draw_coefficient(cfg, rng));
            }
        }
    }
    for e in cfg.wave_links() {
        coef.entry(e).or_insert_with(|| draw_coefficient(cfg, rng));
    }
    let dag = Dag::from_edges(vertices, coef.keys().copied())?;
    Ok((dag, coef))
}

/// Shuffles `edges` and deals them into `q` blocks whose sizes differ by at
/// most one.
pub fn assign_edge_blocks<R: Rng + ?Sized>(edges: &[(usize, usize)], q: usize, rng: &mut R) -> Vec<Vec<(usize, usize)>> {
    let mut shuffled = edges.to_vec();
    shuffled.shuffle(rng);
    let mut blocks = vec![Vec::new(); q];
    for (i, e) in shuffled.into_iter().enumerate() {
        blocks[i % q].push(e);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks
}

/// Linear-Gaussian structural model with block-switched edges.
#[derive(Debug, Clone)]
pub struct MixtureSem {
    /// Vertex roles mark latent and selection variables.
    pub master: Dag,
    pub coefficients: Coefficients,
    pub edge_blocks: Vec<Vec<(usize, usize)>>,
    pub always_on: BTreeSet<(usize, usize)>,
    /// `P(Ti = 1)`.
    pub mixing_probs: Vec<f64>,
    pub latents: Vec<usize>,
    pub selection: Vec<usize>,
    /// Truncation percentile for each selection variable.
    pub truncation: Vec<f64>,
}

impl MixtureSem {
    /// Draws a full instance: master DAG, blocks, mixing probabilities,
    /// latent and selection variables.
    pub fn random<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<Self> {
        let (mut master, coefficients) = random_master_dag(cfg, rng)?;
        let always_on = cfg.wave_links();
        let randomizable: Vec<(usize, usize)> = coefficients.keys().copied().filter(|e| !always_on.contains(e)).collect();
        let q = rng.random_range(cfg.q_range.clone());
        let edge_blocks = assign_edge_blocks(&randomizable, q, rng);
        let mixing_probs = (0..q).map(|_| open_unit(rng)).collect();

        let mut pool: Vec<usize> = (0..cfg.p).collect();
        pool.shuffle(rng);
        let n_lat = rng.random_range(cfg.n_latents_range.clone());
        let n_sel = rng.random_range(cfg.n_selection_range.clone());
        let mut latents = pool[..n_lat].to_vec();
        let mut selection = pool[n_lat..n_lat + n_sel].to_vec();
        latents.sort_unstable();
        selection.sort_unstable();
        let (klo, khi) = cfg.truncation_range;
        let truncation = selection.iter().map(|_| if khi > klo { rng.random_range(klo..=khi) } else { klo }).collect();

        let mut g = master.clone().into_graph();
        for &v in &latents {
            g.vertex_mut(v).role = Role::Latent;
        }
        for &v in &selection {
            g.vertex_mut(v).role = Role::Selection;
        }
        master = Dag::try_from_graph(g)?;
        Ok(MixtureSem { master, coefficients, edge_blocks, always_on, mixing_probs, latents, selection, truncation })
    }

    pub fn q(&self) -> usize {
        self.edge_blocks.len()
    }

    pub fn p(&self) -> usize {
        self.master.n()
    }

    /// Edges realised under the assignment `t`.
    pub fn realized_edges(&self, t: &[bool]) -> BTreeSet<(usize, usize)> {
        let mut e = self.always_on.clone();
        for (i, block) in self.edge_blocks.iter().enumerate() {
            if t[i] {
                e.extend(block.iter().copied());
            }
        }
        e
    }

    /// Observed columns: neither latent nor selection, in index order.
    pub fn observed(&self) -> Vec<usize> {
        (0..self.p()).filter(|v| self.master.vertices()[*v].role == Role::Observed).collect()
    }

    /// Mixture graph with one component: every master edge plus `Ti` into
    /// the head of each edge of block `i`. Grouped d-separation in it agrees
    /// with the expansion over all `2^q` assignments, since the all-ones
    /// assignment contains every other realised graph.
    pub fn mixture_graph(&self) -> Result<MixtureGraph> {
        let mut vertices = self.master.vertices().to_vec();
        let t0 = vertices.len();
        let names: Vec<String> = (0..self.q()).map(|i| format!("T{}", i + 1)).collect();
        for n in &names {
            vertices.push(Vertex::new(n.clone(), Role::Mixture));
        }
        let mut edges: BTreeSet<(usize, usize)> = self.master.edges();
        for (i, block) in self.edge_blocks.iter().enumerate() {
            edges.extend(block.iter().map(|&(_, b)| (t0 + i, b)));
        }
        let dag = Dag::from_edges(vertices, edges)?;
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        MixtureGraph::build(&[dag], &refs)
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Samples over the observed columns, plus the realised assignment per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub waves: Vec<u32>,
    /// Rows × columns.
    pub data: DMatrix<f64>,
    /// Realised `t` per retained row; empty for ingested data.
    pub provenance: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn wave_assignment(&self) -> Result<WaveAssignment> {
        WaveAssignment::new(self.labels.clone(), self.waves.clone())
    }

    /// Rows at the given positions, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let data = DMatrix::from_fn(rows.len(), self.data.ncols(), |r, c| self.data[(rows[r], c)]);
        let provenance = if self.provenance.is_empty() { Vec::new() } else { rows.iter().map(|&r| self.provenance[r].clone()).collect() };
        Dataset { labels: self.labels.clone(), waves: self.waves.clone(), data, provenance }
    }
}

/// Instance metadata written next to simulated data.
#[derive(Debug, Clone, Serialize)]
pub struct SynthManifest {
    pub seed: u64,
    /// Seed that produced the retained rows; differs from `seed` after a
    /// regeneration.
    pub sample_seed: u64,
    pub q: usize,
    pub mixing_probs: Vec<f64>,
    pub latents: Vec<String>,
    pub selection: Vec<String>,
    pub truncation_percentiles: Vec<f64>,
    pub rows_generated: usize,
    pub rows_retained: usize,
}

/// Truth over the observed columns with the scoring mask.
#[derive(Debug, Clone)]
pub struct InstanceTruth {
    pub truth: GroundTruthMixed,
    pub fused: FusedGraph,
    pub waves: WaveAssignment,
    /// Endpoints at vertex `v` are scored iff `mask[v]` (waves 2 and later).
    pub mask: Vec<bool>,
}

/// All `p` variables for every row, before marginalisation and truncation.
pub fn sample_full(sem: &MixtureSem, n: usize, seed: u64) -> (DMatrix<f64>, Vec<Vec<bool>>) {
    let p = sem.p();
    let order = sem.master.topological_order();
    let block_of: BTreeMap<(usize, usize), usize> =
        sem.edge_blocks.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |&e| (e, i))).collect();
    // (parent, coefficient, switching block)
    let parents: Vec<Vec<(usize, f64, Option<usize>)>> = (0..p)
        .map(|v| sem.master.parents(v).iter().map(|&u| (u, sem.coefficients[&(u, v)], block_of.get(&(u, v)).copied())).collect())
        .collect();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let t: Vec<bool> = sem.mixing_probs.iter().map(|&pr| rng.random_bool(pr)).collect();
            let mut x = vec![0.0; p];
            for &v in &order {
                let noise: f64 = StandardNormal.sample(&mut rng);
                x[v] = noise
                    + parents[v].iter().filter(|(_, _, b)| b.is_none_or(|b| t[b])).map(|&(u, c, _)| c * x[u]).sum::<f64>();
            }
            (x, t)
        })
        .collect();
    let data = DMatrix::from_fn(n, p, |r, c| rows[r].0[c]);
    (data, rows.into_iter().map(|(_, t)| t).collect())
}

/// Rows surviving truncation: for each selection variable the `k`th
/// percentile is taken over all generated rows, and the union of the
/// bottom rows is removed.
pub fn truncate(data: &DMatrix<f64>, selection: &[usize], percentiles: &[f64]) -> Vec<usize> {
    let n = data.nrows();
    let mut drop = vec![false; n];
    for (&s, &k) in selection.iter().zip(percentiles) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| data[(a, s)].total_cmp(&data[(b, s)]).then(a.cmp(&b)));
        let m = ((k / 100.0) * n as f64).floor() as usize;
        for &r in &idx[..m] {
            drop[r] = true;
        }
    }
    (0..n).filter(|&r| !drop[r]).collect()
}

/// Samples `cfg.n_samples` rows, removes latent and selection columns and
/// truncates on the selection variables. If nothing survives, sampling
/// restarts with the next seed.
pub fn sample_dataset(sem: &MixtureSem, cfg: &SynthConfig) -> Result<(Dataset, InstanceTruth, SynthManifest)> {
    let obs = sem.observed();
    let mut seed = cfg.seed;
    let (data, prov, kept) = loop {
        let (data, prov) = sample_full(sem, cfg.n_samples, seed);
        let kept = truncate(&data, &sem.selection, &sem.truncation);
        if !kept.is_empty() {
            break (data, prov, kept);
        }
        warn!("no rows survived truncation with seed {seed}; regenerating");
        seed = seed.wrapping_add(1);
    };
    let labels: Vec<String> = obs.iter().map(|&v| sem.master.label(v).to_string()).collect();
    let waves: Vec<u32> = obs.iter().map(|&v| sem.master.vertices()[v].wave.unwrap_or(1)).collect();
    let out = DMatrix::from_fn(kept.len(), obs.len(), |r, c| data[(kept[r], obs[c])]);
    let provenance = kept.iter().map(|&r| prov[r].clone()).collect();
    let dataset = Dataset { labels, waves, data: out, provenance };
    let truth = ground_truth_for_instance(sem)?;
    let name = |v: &usize| sem.master.label(*v).to_string();
    let manifest = SynthManifest {
        seed: cfg.seed,
        sample_seed: seed,
        q: sem.q(),
        mixing_probs: sem.mixing_probs.clone(),
        latents: sem.latents.iter().map(name).collect(),
        selection: sem.selection.iter().map(name).collect(),
        truncation_percentiles: sem.truncation.clone(),
        rows_generated: cfg.n_samples,
        rows_retained: kept.len(),
    };
    Ok((dataset, truth, manifest))
}

/// Endpoint truth for an instance, with the waves-2-and-later mask.
pub fn ground_truth_for_instance(sem: &MixtureSem) -> Result<InstanceTruth> {
    let m = sem.mixture_graph()?;
    let waves = WaveAssignment::from_vertices(m.base())?;
    let truth = ground_truth_endpoints(&m, &waves)?;
    let mask = waves.waves().iter().map(|&w| w >= 2).collect();
    Ok(InstanceTruth { truth, fused: m.fused(), waves, mask })
}

/// Draws an instance from `cfg.seed` and samples it.
pub fn generate(cfg: &SynthConfig) -> Result<(MixtureSem, Dataset, InstanceTruth, SynthManifest)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sem = MixtureSem::random(cfg, &mut rng)?;
    let (d, t, m) = sample_dataset(&sem, cfg)?;
    Ok((sem, d, t, m))
}

/// Variables of each wave in the bundled stand-in for a cardiovascular
/// cohort: three waves of the same eight measurements.
pub const STANDIN_VARS: [&str; 8] = ["AGE", "SBP", "DBP", "CHOL", "BMI", "CIGS", "HR", "GLUC"];

/// Within-wave causes of the stand-in, all active in every row except the
/// two switched ones: `SBP -> DBP` follows `T1` and `CIGS -> HR` follows `T2`.
pub const STANDIN_EDGES: [(&str, &str, f64); 8] = [
    ("AGE", "SBP", 0.6),
    ("AGE", "CHOL", 0.5),
    ("BMI", "CIGS", -0.5),
    ("CIGS", "HR", 0.7),
    ("SBP", "DBP", 0.8),
    ("BMI", "GLUC", 0.4),
    ("CHOL", "GLUC", 0.3),
    ("BMI", "SBP", 0.3),
];

/// Coefficient of each variable on its own previous-wave value.
pub const STANDIN_CARRYOVER: f64 = 0.7;

pub fn standin_label(var: &str, wave: u32) -> String {
    format!("{var}_{wave}")
}

/// The stand-in model: 24 observed variables, no latent or selection
/// variables, and two switched edge blocks.
pub fn standin_sem() -> Result<MixtureSem> {
    let nv = STANDIN_VARS.len();
    let idx = |var: &str, w: usize| -> usize { w * nv + STANDIN_VARS.iter().position(|v| *v == var).expect("stand-in variable") };
    let vertices: Vec<Vertex> = (0..3u32)
        .flat_map(|w| STANDIN_VARS.iter().map(move |v| Vertex::observed(standin_label(v, w + 1), Some(w + 1))))
        .collect();
    let mut coefficients = Coefficients::new();
    let mut blocks = vec![Vec::new(), Vec::new()];
    let mut always_on = BTreeSet::new();
    for w in 0..3 {
        for &(a, b, c) in &STANDIN_EDGES {
            let e = (idx(a, w), idx(b, w));
            coefficients.insert(e, c);
            match (a, b) {
                ("SBP", "DBP") => blocks[0].push(e),
                ("CIGS", "HR") => blocks[1].push(e),
                _ => {
                    always_on.insert(e);
                }
            }
        }
        if w > 0 {
            for v in 0..nv {
                let e = ((w - 1) * nv + v, w * nv + v);
                coefficients.insert(e, STANDIN_CARRYOVER);
                always_on.insert(e);
            }
        }
    }
    let master = Dag::from_edges(vertices, coefficients.keys().copied())?;
    Ok(MixtureSem {
        master,
        coefficients,
        edge_blocks: blocks,
        always_on,
        mixing_probs: vec![0.6, 0.75],
        latents: Vec::new(),
        selection: Vec::new(),
        truncation: Vec::new(),
    })
}

/// `n` rows of the stand-in model.
pub fn standin_dataset(n: usize, seed: u64) -> Result<Dataset> {
    let sem = standin_sem()?;
    let cfg = SynthConfig { n_samples: n, seed, ..SynthConfig::default() };
    Ok(sample_dataset(&sem, &cfg)?.0)
}

/// Known within-wave causes of the stand-in, one `A -> B` line each.
pub fn standin_relations() -> String {
    let mut s = String::from("# known direct causes in every wave\n");
    for w in 1..=3 {
        for (a, b) in [("CIGS", "HR"), ("AGE", "SBP"), ("AGE", "CHOL"), ("BMI", "CIGS"), ("SBP", "DBP")] {
            s.push_str(&format!("{} -> {}\n", standin_label(a, w), standin_label(b, w)));
        }
    }
    s
}
