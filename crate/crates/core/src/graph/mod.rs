//! Graph primitives: vertices with roles, directed graphs, DAGs and
//! partially oriented mixed graphs.

mod dag;
mod digraph;
pub mod dsep;
mod mixed;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dag::{minimal_separating_set_check, Dag};
pub use digraph::DirectedGraph;
pub use mixed::{Mark, MixedEdge, MixedGraph};

/// A set of vertex indices. Ordered so serialized output is sorted.
pub type VertexSet = BTreeSet<usize>;

/// Role of a vertex in the partition `Z = O ∪ L ∪ S` plus mixture variables.
///
/// `Mixture` marks an unobserved mixture variable; it is treated as latent by
/// every query over observed variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Observed,
    Latent,
    Selection,
    Mixture,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Observed => "observed",
            Role::Latent => "latent",
            Role::Selection => "selection",
            Role::Mixture => "mixture",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "observed" => Ok(Role::Observed),
            "latent" => Ok(Role::Latent),
            "selection" => Ok(Role::Selection),
            "mixture" => Ok(Role::Mixture),
            other => Err(Error::invalid(format!("unknown role `{other}`"))),
        }
    }
}

/// Vertex metadata. The vertex index is its position in the owning graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub label: String,
    pub role: Role,
    /// Wave index (1-based); only meaningful for observed vertices.
    pub wave: Option<u32>,
}

impl Vertex {
    pub fn new(label: impl Into<String>, role: Role) -> Self {
        Vertex { label: label.into(), role, wave: None }
    }

    pub fn observed(label: impl Into<String>, wave: Option<u32>) -> Self {
        Vertex { label: label.into(), role: Role::Observed, wave }
    }

    pub fn with_wave(mut self, wave: u32) -> Self {
        self.wave = Some(wave);
        self
    }
}

/// Read access to a directed graph; implemented by both [`DirectedGraph`]
/// (cycles allowed) and [`Dag`].
pub trait Digraph {
    fn vertices(&self) -> &[Vertex];
    fn parents(&self, v: usize) -> &[usize];
    fn children(&self, v: usize) -> &[usize];

    fn n(&self) -> usize {
        self.vertices().len()
    }

    fn label(&self, v: usize) -> &str {
        &self.vertices()[v].label
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        self.vertices().iter().position(|v| v.label == label)
    }

    fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children(from).binary_search(&to).is_ok()
    }

    /// Ancestor mask of the vertices flagged in `targets` (reflexive).
    fn ancestor_mask(&self, targets: &[bool]) -> Vec<bool> {
        let mut seen = targets.to_vec();
        let mut stack: Vec<usize> = (0..self.n()).filter(|&v| targets[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in self.parents(v) {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// `Anc(ys)`: every vertex with a directed path into `ys`, plus `ys` itself.
    fn ancestors(&self, ys: &VertexSet) -> Result<VertexSet> {
        let mask = to_mask(self.n(), ys)?;
        Ok(from_mask(&self.ancestor_mask(&mask)))
    }
}

pub(crate) fn to_mask(n: usize, set: &VertexSet) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        mask[v] = true;
    }
    Ok(mask)
}

pub(crate) fn from_mask(mask: &[bool]) -> VertexSet {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Checks pairwise disjointness, naming the first shared vertex.
pub(crate) fn check_disjoint(
    vertices: &[Vertex],
    sets: &[&VertexSet],
) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(&v) = a.intersection(b).next() {
                let label = vertices.get(v).map(|x| x.label.clone()).unwrap_or_else(|| format!("#{v}"));
                return Err(Error::OverlappingSets(label));
            }
        }
    }
    Ok(())
}

/// Resolves labels to indices against a vertex list.
pub fn resolve_labels<'a, I>(vertices: &[Vertex], labels: I) -> Result<VertexSet>
where
    I: IntoIterator<Item = &'a str>,
{
    labels
        .into_iter()
        .map(|l| {
            vertices
                .iter()
                .position(|v| v.label == l)
                .ok_or_else(|| Error::UnknownVertex(l.to_string()))
        })
        .collect()
}

/// Labels of a vertex set, in index order.
pub fn labels_of(vertices: &[Vertex], set: &VertexSet) -> Vec<String> {
    set.iter().map(|&v| vertices[v].label.clone()).collect()
}
