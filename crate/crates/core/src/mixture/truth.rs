use std::collections::BTreeSet;

use serde::Serialize;

use super::{FusedGraph, MixtureGraph};
use crate::ci::OracleCi;
use crate::cim::{cim_skeleton, CimConfig, WaveAssignment};
use crate::error::{Error, Result};
use crate::graph::{Digraph, Mark, MixedGraph, Vertex, VertexSet};

/// Ancestral ground truth over the observed vertices.
///
/// Adjacencies come from oracle skeleton discovery; every endpoint of every
/// pair, adjacent or not, has a truth mark read off the fused graph: a tail
/// at `Oj` on `Oi – Oj` iff `Oj ∈ Anc_F(Oi ∪ S)`, an arrow otherwise.
#[derive(Debug, Clone)]
pub struct GroundTruthMixed {
    graph: MixedGraph,
    /// `anc[i][j]`: `Oj ∈ Anc_F(Oi)`.
    anc: Vec<Vec<bool>>,
    /// `anc_s[i][j]`: `Oj ∈ Anc_F(Oi ∪ S)`.
    anc_s: Vec<Vec<bool>>,
}

/// An estimated endpoint that disagrees with the ancestral truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contradiction {
    /// Vertex carrying the mark.
    pub at: String,
    /// Other endpoint of the edge.
    pub other: String,
    pub mark: Mark,
}

impl GroundTruthMixed {
    /// Builds the truth from a fused graph, the observed vertices (base
    /// indices into `f`, in output order), the selection set and a skeleton
    /// given as pairs of positions into `observed`.
    pub fn from_fused(
        f: &FusedGraph,
        observed: &[usize],
        selection: &VertexSet,
        skeleton: &BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        let n = observed.len();
        let mut anc = vec![vec![false; n]; n];
        let mut anc_s = vec![vec![false; n]; n];
        for (i, &oi) in observed.iter().enumerate() {
            let a = f.ancestors(&[oi].into())?;
            let mut with_s: VertexSet = selection.clone();
            with_s.insert(oi);
            let a_s = f.ancestors(&with_s)?;
            for (j, &oj) in observed.iter().enumerate() {
                anc[i][j] = a.contains(&oj);
                anc_s[i][j] = a_s.contains(&oj);
            }
        }
        let vertices: Vec<Vertex> = observed.iter().map(|&v| f.vertices()[v].clone()).collect();
        let mut graph = MixedGraph::new(vertices);
        for &(u, v) in skeleton {
            if u >= n || v >= n {
                return Err(Error::invalid("skeleton pair out of range"));
            }
            let mark = |i: usize, j: usize| if anc_s[i][j] { Mark::Tail } else { Mark::Arrow };
            graph.set_edge(u, v, mark(v, u), mark(u, v))?;
        }
        Ok(GroundTruthMixed { graph, anc, anc_s })
    }

    /// Truth skeleton with truth marks.
    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.graph.index_of(label)
    }

    /// Truth mark at `j` on the pair `i – j` (positions in the observed list).
    pub fn truth_mark(&self, i: usize, j: usize) -> Mark {
        if self.anc_s[i][j] {
            Mark::Tail
        } else {
            Mark::Arrow
        }
    }

    /// `Oj ∈ Anc_F(Oi)`.
    pub fn is_ancestor(&self, j: usize, i: usize) -> bool {
        self.anc[i][j]
    }

    /// `Oj ∈ Anc_F(Oi ∪ S)`.
    pub fn is_ancestor_with_selection(&self, j: usize, i: usize) -> bool {
        self.anc_s[i][j]
    }

    /// Endpoints of `est` that violate the ancestral reading: an arrow at
    /// `Oj` when `Oj ∈ Anc_F(Oi)`, a tail at `Oj` when `Oj ∉ Anc_F(Oi ∪ S)`.
    /// Edges are matched by label; circles never contradict.
    pub fn contradictions(&self, est: &MixedGraph) -> Result<Vec<Contradiction>> {
        let map: Vec<usize> = (0..est.n())
            .map(|v| self.index_of(est.label(v)).ok_or_else(|| Error::UnknownVertex(est.label(v).to_string())))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        for (u, v, mu, mv) in est.edges() {
            for (at, other, mark) in [(u, v, mu), (v, u, mv)] {
                let (j, i) = (map[at], map[other]);
                let bad = match mark {
                    Mark::Arrow => self.anc[i][j],
                    Mark::Tail => !self.anc_s[i][j],
                    Mark::Circle => false,
                };
                if bad {
                    out.push(Contradiction { at: est.label(at).to_string(), other: est.label(other).to_string(), mark });
                }
            }
        }
        Ok(out)
    }
}

/// Ground truth for a mixture: skeleton from oracle discovery, marks from
/// the fused graph. The observed order follows `waves`.
pub fn ground_truth_endpoints(m: &MixtureGraph, waves: &WaveAssignment) -> Result<GroundTruthMixed> {
    let oracle = OracleCi::new(m, waves.labels())?;
    let (skel, _) = cim_skeleton(&oracle, waves, &CimConfig::default())?;
    let pairs: BTreeSet<(usize, usize)> = skel.edges().into_iter().map(|(u, v, _, _)| (u, v)).collect();
    let mut truth = GroundTruthMixed::from_fused(&m.fused(), oracle.vars(), &m.selection(), &pairs)?;
    for (k, &w) in waves.waves().iter().enumerate() {
        truth.graph.set_wave(k, Some(w));
    }
    Ok(truth)
}
