use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Vertex;
use crate::error::{Error, Result};

/// Endpoint mark of an edge in a mixed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::Tail => "tail",
            Mark::Arrow => "arrow",
            Mark::Circle => "circle",
        })
    }
}

/// One edge in label space, normalized so `a <= b` lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MixedEdge {
    pub a: String,
    pub b: String,
    pub mark_at_a: Mark,
    pub mark_at_b: Mark,
}

/// Partially oriented mixed graph: at most one edge per vertex pair, one
/// mark per endpoint.
///
/// Storage is `far[u][v] = mark at v on edge u–v`, so each endpoint is held
/// exactly once and queries from either side agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    vertices: Vec<Vertex>,
    far: Vec<BTreeMap<usize, Mark>>,
}

impl MixedGraph {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        let n = vertices.len();
        MixedGraph { vertices, far: vec![BTreeMap::new(); n] }
    }

    /// Complete graph with `o-o` on every pair.
    pub fn complete(vertices: Vec<Vertex>) -> Self {
        let mut g = MixedGraph::new(vertices);
        let n = g.n();
        for u in 0..n {
            for v in u + 1..n {
                g.far[u].insert(v, Mark::Circle);
                g.far[v].insert(u, Mark::Circle);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn label(&self, v: usize) -> &str {
        &self.vertices[v].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.label == label)
    }

    pub fn wave(&self, v: usize) -> Option<u32> {
        self.vertices[v].wave
    }

    pub fn set_wave(&mut self, v: usize, wave: Option<u32>) {
        self.vertices[v].wave = wave;
    }

    /// Adds or replaces the edge `u–v` with the given marks.
    pub fn set_edge(&mut self, u: usize, v: usize, mark_at_u: Mark, mark_at_v: Mark) -> Result<()> {
        if u >= self.n() || v >= self.n() {
            return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
        }
        if u == v {
            return Err(Error::invalid(format!("self-edge on `{}`", self.label(u))));
        }
        self.far[u].insert(v, mark_at_v);
        self.far[v].insert(u, mark_at_u);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let had = self.far[u].remove(&v).is_some();
        self.far[v].remove(&u);
        had
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.far[u].contains_key(&v)
    }

    /// Mark at `v` on the edge `u–v`.
    pub fn mark_at(&self, u: usize, v: usize) -> Option<Mark> {
        self.far[u].get(&v).copied()
    }

    /// Sets the mark at `v` on the existing edge `u–v`.
    pub fn set_mark(&mut self, u: usize, v: usize, mark: Mark) -> Result<()> {
        match self.far[u].get_mut(&v) {
            Some(m) => {
                *m = mark;
                Ok(())
            }
            None => Err(Error::invalid(format!(
                "no edge between `{}` and `{}`",
                self.label(u),
                self.label(v)
            ))),
        }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.far[v].keys().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.far[v].len()
    }

    /// Index-space edges `(u, v, mark at u, mark at v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, Mark, Mark)> {
        let mut out = Vec::new();
        for u in 0..self.n() {
            for (&v, &mv) in self.far[u].range(u + 1..) {
                out.push((u, v, self.far[v][&u], mv));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.far.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    /// Unordered label pairs, for skeleton comparisons.
    pub fn skeleton(&self) -> BTreeSet<(String, String)> {
        self.edges()
            .into_iter()
            .map(|(u, v, _, _)| ordered(self.label(u), self.label(v)))
            .collect()
    }

    /// Edges in label space; invariant under vertex reordering.
    pub fn labeled_edges(&self) -> BTreeSet<MixedEdge> {
        self.edges()
            .into_iter()
            .map(|(u, v, mu, mv)| {
                let (lu, lv) = (self.label(u), self.label(v));
                if lu <= lv {
                    MixedEdge { a: lu.into(), b: lv.into(), mark_at_a: mu, mark_at_b: mv }
                } else {
                    MixedEdge { a: lv.into(), b: lu.into(), mark_at_a: mv, mark_at_b: mu }
                }
            })
            .collect()
    }

    /// Number of endpoints holding `mark`.
    pub fn count_marks(&self, mark: Mark) -> usize {
        self.far.iter().flat_map(|m| m.values()).filter(|&&m| m == mark).count()
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}
