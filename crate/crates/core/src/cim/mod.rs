//! Causal Inference over Mixtures and a PC-stable baseline.
//!
//! Every loop visits vertices in label order and enumerates conditioning
//! sets lexicographically by label, so results do not depend on the column
//! order of the input.

mod pc;
mod skeleton;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, warn};
use serde::Serialize;

use crate::ci::CiTest;
use crate::error::{Error, Result};
use crate::graph::{Mark, MixedGraph, Role, Vertex, VertexSet};

pub use pc::pc_stable_baseline;
pub use skeleton::cim_skeleton;

/// Wave index per variable; variable order matches the CI backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaveAssignment {
    labels: Vec<String>,
    waves: Vec<u32>,
}

impl WaveAssignment {
    pub fn new(labels: Vec<String>, waves: Vec<u32>) -> Result<Self> {
        if labels.len() != waves.len() {
            return Err(Error::invalid("one wave per variable required"));
        }
        if waves.contains(&0) {
            return Err(Error::invalid("waves are numbered from 1"));
        }
        let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != labels.len() {
            return Err(Error::invalid("duplicate variable label in wave assignment"));
        }
        Ok(WaveAssignment { labels, waves })
    }

    /// Observed vertices of `vertices`, in order; each must carry a wave.
    pub fn from_vertices(vertices: &[Vertex]) -> Result<Self> {
        let mut labels = Vec::new();
        let mut waves = Vec::new();
        for v in vertices.iter().filter(|v| v.role == Role::Observed) {
            let w = v.wave.ok_or_else(|| Error::invalid(format!("observed vertex `{}` has no wave", v.label)))?;
            labels.push(v.label.clone());
            waves.push(w);
        }
        WaveAssignment::new(labels, waves)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn waves(&self) -> &[u32] {
        &self.waves
    }

    pub fn wave(&self, v: usize) -> u32 {
        self.waves[v]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn n_waves(&self) -> usize {
        self.waves.iter().collect::<BTreeSet<_>>().len()
    }

    /// Observed vertices carrying these labels and waves.
    pub fn vertices(&self) -> Vec<Vertex> {
        self.labels.iter().zip(&self.waves).map(|(l, &w)| Vertex::observed(l.clone(), Some(w))).collect()
    }

    /// Reorders to follow `labels`.
    pub fn reordered<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let waves = labels
            .iter()
            .map(|l| {
                self.index_of(l.as_ref()).map(|i| self.waves[i]).ok_or_else(|| Error::UnknownVertex(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        WaveAssignment::new(labels.iter().map(|l| l.as_ref().to_string()).collect(), waves)
    }
}

/// Assertions "`a` cannot be an ancestor of `b`", as index pairs `(a, b)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorKnowledge {
    pub forbidden: BTreeSet<(usize, usize)>,
}

impl PriorKnowledge {
    pub fn none() -> Self {
        PriorKnowledge::default()
    }

    pub fn forbid(&mut self, ancestor: usize, descendant: usize) {
        self.forbidden.insert((ancestor, descendant));
    }
}

/// Separating sets keyed by the unordered pair `(min, max)`.
pub type SepMap = BTreeMap<(usize, usize), VertexSet>;

/// Separating sets containing the middle vertex, keyed by `(i, j, k)` for
/// the triple `i *-> j *-* k`.
pub type Sep2Map = BTreeMap<(usize, usize, usize), VertexSet>;

pub(crate) fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub struct CimConfig {
    /// Largest conditioning set tried; `None` is unbounded.
    pub max_cond: Option<usize>,
}


#[derive(Debug, Clone)]
pub struct CimOutput {
    pub graph: MixedGraph,
    pub sep: SepMap,
    pub sep2: Sep2Map,
    /// Orientation requests that met an existing mark and were skipped.
    pub conflicts: Vec<String>,
}

/// Label ranks, so that iteration follows label order.
pub(crate) struct Ranking {
    /// Vertices sorted by label.
    pub order: Vec<usize>,
    pub rank: Vec<usize>,
}

impl Ranking {
    pub fn new(labels: &[String]) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        let mut rank = vec![0; labels.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        Ranking { order, rank }
    }

    /// Sorts vertices by label rank.
    pub fn sorted(&self, mut vs: Vec<usize>) -> Vec<usize> {
        vs.sort_by_key(|&v| self.rank[v]);
        vs
    }

    /// `(a, b)` with the lower-ranked vertex first.
    pub fn ordered(&self, a: usize, b: usize) -> (usize, usize) {
        if self.rank[a] <= self.rank[b] {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Neighbours of `v` whose wave lies between `a` and `b` inclusive.
pub fn wave_adjacency(est: &MixedGraph, waves: &WaveAssignment, v: usize, a: u32, b: u32) -> VertexSet {
    let (lo, hi) = (a.min(b), a.max(b));
    est.neighbors(v).filter(|&u| (lo..=hi).contains(&waves.wave(u))).collect()
}

/// All `k`-subsets of `items` in lexicographic order of position.
pub(crate) fn for_each_subset<F>(items: &[usize], k: usize, mut f: F) -> Result<bool>
where
    F: FnMut(&[usize]) -> Result<bool>,
{
    if k > items.len() {
        return Ok(false);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        if f(&buf)? {
            return Ok(true);
        }
        // advance to the next combination
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(false);
            }
            pos -= 1;
            if idx[pos] != pos + items.len() - k {
                break;
            }
            if pos == 0 {
                return Ok(false);
            }
        }
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

pub(crate) fn query_error(labels: &[String], x: usize, y: usize, given: &[usize], e: Error) -> Error {
    let g: Vec<&str> = given.iter().map(|&v| labels[v].as_str()).collect();
    Error::CiQuery { query: format!("{} _||_ {} | {{{}}}", labels[x], labels[y], g.join(", ")), source: Box::new(e) }
}

/// Places arrowheads from wave order and prior knowledge.
///
/// Fails with [`Error::Inconsistent`] when an arrowhead is requested at an
/// endpoint that already carries a tail.
pub fn orient_waves(est: &mut MixedGraph, waves: &WaveAssignment, pk: &PriorKnowledge) -> Result<()> {
    let mut targets: Vec<(usize, usize)> = Vec::new();
    for (u, v, _, _) in est.edges() {
        if waves.wave(u) < waves.wave(v) {
            targets.push((u, v));
        } else if waves.wave(v) < waves.wave(u) {
            targets.push((v, u));
        }
    }
    for &(a, b) in &pk.forbidden {
        if a < est.n() && b < est.n() && est.adjacent(a, b) {
            targets.push((b, a));
        }
    }
    for (from, at) in targets {
        match est.mark_at(from, at) {
            Some(Mark::Circle) => est.set_mark(from, at, Mark::Arrow)?,
            Some(Mark::Tail) => {
                return Err(Error::Inconsistent(format!(
                    "arrowhead requested at `{}` on `{} - {}`, which already has a tail",
                    est.label(at),
                    est.label(from),
                    est.label(at)
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Candidate sets for an unshielded triple `i *-> j *-* k` with `j ∉ Sep(i, k)`:
/// the first separating, minimal set containing `j` drawn from the
/// wave-restricted neighbourhood of `i`, then of `k`.
pub fn find_sep2<C: CiTest + ?Sized>(
    est: &MixedGraph,
    ci: &C,
    waves: &WaveAssignment,
    sep: &SepMap,
    cfg: &CimConfig,
) -> Result<Sep2Map> {
    let rk = Ranking::new(waves.labels());
    let mut out = Sep2Map::new();
    for &j in &rk.order {
        let nbrs = rk.sorted(est.neighbors(j).collect());
        for &i in &nbrs {
            if est.mark_at(i, j) != Some(Mark::Arrow) {
                continue;
            }
            for &k in &nbrs {
                if k == i || est.adjacent(i, k) {
                    continue;
                }
                match sep.get(&pair(i, k)) {
                    Some(s) if !s.contains(&j) => {}
                    _ => continue,
                }
                let (a, b) = (waves.wave(i), waves.wave(k));
                for side in [i, k] {
                    let other = if side == i { k } else { i };
                    let mut cand = wave_adjacency(est, waves, side, a, b);
                    cand.remove(&other);
                    if !cand.contains(&j) {
                        continue;
                    }
                    if let Some(w) = minimal_set_containing(ci, waves.labels(), &rk, i, k, j, &cand, cfg)? {
                        debug!("Sep2({}, {}, {}) = {:?}", waves.labels()[i], waves.labels()[j], waves.labels()[k], w);
                        out.insert((i, j, k), w);
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn minimal_set_containing<C: CiTest + ?Sized>(
    ci: &C,
    labels: &[String],
    rk: &Ranking,
    i: usize,
    k: usize,
    j: usize,
    cand: &VertexSet,
    cfg: &CimConfig,
) -> Result<Option<VertexSet>> {
    let rest: Vec<usize> = rk.sorted(cand.iter().copied().filter(|&v| v != j).collect());
    let (x, y) = rk.ordered(i, k);
    let test = |g: &[usize]| -> Result<bool> {
        let g = rk.sorted(g.to_vec());
        ci.test(x, y, &g).map(|d| d.independent).map_err(|e| query_error(labels, x, y, &g, e))
    };
    let max = cfg.max_cond.unwrap_or(usize::MAX).min(cand.len());
    let mut found = None;
    for size in 1..=max {
        let hit = for_each_subset(&rest, size - 1, |others| {
            let mut w: Vec<usize> = others.to_vec();
            w.push(j);
            if !test(&w)? {
                return Ok(false);
            }
            // every proper subset must fail to separate
            for sub_size in 0..w.len() {
                if for_each_subset(&rk.sorted(w.clone()), sub_size, |sub| test(sub))? {
                    return Ok(false);
                }
            }
            found = Some(w.iter().copied().collect::<VertexSet>());
            Ok(true)
        })?;
        if hit {
            break;
        }
    }
    Ok(found)
}

/// Tail at `j` on `j o-* k` for every `i *-> j o-* k` with `i`, `k`
/// non-adjacent and `j ∈ Sep(i, k)` or a non-empty `Sep2(i, j, k)`.
pub fn orient_tails(est: &mut MixedGraph, sep: &SepMap, sep2: &Sep2Map, conflicts: &mut Vec<String>) -> Result<()> {
    let labels: Vec<String> = est.vertices().iter().map(|v| v.label.clone()).collect();
    let rk = Ranking::new(&labels);
    let mut tails = BTreeSet::new();
    for &j in &rk.order {
        let nbrs = rk.sorted(est.neighbors(j).collect());
        for &i in &nbrs {
            if est.mark_at(i, j) != Some(Mark::Arrow) {
                continue;
            }
            for &k in &nbrs {
                if k == i || est.adjacent(i, k) {
                    continue;
                }
                let in_sep = sep.get(&pair(i, k)).is_some_and(|s| s.contains(&j));
                let in_sep2 = sep2.get(&(i, j, k)).is_some_and(|s| !s.is_empty());
                if in_sep || in_sep2 {
                    tails.insert((k, j));
                }
            }
        }
    }
    for (k, j) in tails {
        match est.mark_at(k, j) {
            Some(Mark::Circle) => est.set_mark(k, j, Mark::Tail)?,
            Some(Mark::Arrow) => {
                let msg = format!("tail requested at `{}` on `{} - {}` kept as arrowhead", labels[j], labels[j], labels[k]);
                warn!("{msg}");
                conflicts.push(msg);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Tail at `a` on `a o-* b` whenever a chain `a -* .. -* b` of edges with
/// tails at their first vertex exists; repeated to a fixpoint.
pub fn transitive_tails(est: &mut MixedGraph) -> Result<()> {
    loop {
        let mut added = Vec::new();
        for a in 0..est.n() {
            let circles: Vec<usize> = est.neighbors(a).filter(|&b| est.mark_at(b, a) == Some(Mark::Circle)).collect();
            if circles.is_empty() {
                continue;
            }
            let reach = tail_reach(est, a);
            for b in circles {
                if reach[b] {
                    added.push((b, a));
                }
            }
        }
        if added.is_empty() {
            return Ok(());
        }
        for (b, a) in added {
            est.set_mark(b, a, Mark::Tail)?;
        }
    }
}

/// Vertices reachable from `a` along edges `u -* v` (tail at `u`).
fn tail_reach(est: &MixedGraph, a: usize) -> Vec<bool> {
    let mut seen = vec![false; est.n()];
    let mut queue = VecDeque::from([a]);
    let mut out = vec![false; est.n()];
    seen[a] = true;
    while let Some(u) = queue.pop_front() {
        for v in est.neighbors(u) {
            if est.mark_at(v, u) == Some(Mark::Tail) && !seen[v] {
                seen[v] = true;
                out[v] = true;
                queue.push_back(v);
            }
        }
    }
    out
}

/// Full CIM run. Needs at least two waves.
pub fn run_cim<C: CiTest + ?Sized>(
    ci: &C,
    waves: &WaveAssignment,
    pk: &PriorKnowledge,
    cfg: &CimConfig,
) -> Result<CimOutput> {
    if waves.n_waves() < 2 {
        return Err(Error::invalid("CIM needs at least two waves"));
    }
    let (mut graph, sep) = cim_skeleton(ci, waves, cfg)?;
    orient_waves(&mut graph, waves, pk)?;
    let sep2 = find_sep2(&graph, ci, waves, &sep, cfg)?;
    let mut conflicts = Vec::new();
    orient_tails(&mut graph, &sep, &sep2, &mut conflicts)?;
    transitive_tails(&mut graph)?;
    Ok(CimOutput { graph, sep, sep2, conflicts })
}

#[cfg(test)]
mod tests;
