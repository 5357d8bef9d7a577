//! Mixture graphs, fused graphs and grouped d-separation.

pub mod discrete;
pub mod fixtures;
mod indist;
pub mod random;
mod truth;

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{dsep, Dag, Digraph, DirectedGraph, Role, Vertex, VertexSet};

pub use indist::build_indistinguishable_pair;
pub use truth::{ground_truth_endpoints, Contradiction, GroundTruthMixed};

/// Summary graph over the base vertices; may contain cycles.
pub type FusedGraph = DirectedGraph;

/// Component DAGs drawn side by side, with every mixture vertex merged
/// into a single shared copy.
#[derive(Debug, Clone)]
pub struct MixtureGraph {
    base: Vec<Vertex>,
    components: Vec<Dag>,
    expanded: Dag,
    /// `prime[v]`: indices in `expanded` of all copies of base vertex `v`.
    prime: Vec<Vec<usize>>,
    /// `origin[x] = (base vertex, component)`; component is `None` for merged vertices.
    origin: Vec<(usize, Option<usize>)>,
}

/// Label of the copy of `label` in component `j` (0-based).
pub fn copy_label(label: &str, j: usize) -> String {
    format!("{label}^{}", j + 1)
}

impl MixtureGraph {
    /// Builds the mixture graph of `components`; vertices named in `t_names`
    /// are merged across components and get role [`Role::Mixture`].
    ///
    /// Components must share the same label set. The first component fixes
    /// the base vertex order, roles and waves.
    pub fn build(components: &[Dag], t_names: &[&str]) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        let mut base: Vec<Vertex> = first.vertices().to_vec();
        let mut is_t = vec![false; base.len()];
        for name in t_names {
            let i = first.index_of(name).ok_or_else(|| Error::UnknownVertex(name.to_string()))?;
            is_t[i] = true;
            base[i].role = Role::Mixture;
            base[i].wave = None;
        }
        for (i, v) in base.iter().enumerate() {
            if v.role == Role::Mixture && !is_t[i] {
                is_t[i] = true;
            }
        }

        // reindex every component into base order
        let mut comps = Vec::with_capacity(components.len());
        for (j, c) in components.iter().enumerate() {
            let labels: BTreeSet<&str> = c.vertices().iter().map(|v| v.label.as_str()).collect();
            let want: BTreeSet<&str> = base.iter().map(|v| v.label.as_str()).collect();
            if labels != want {
                return Err(Error::invalid(format!("component {} has a different vertex set", j + 1)));
            }
            let map: Vec<usize> = c.vertices().iter().map(|v| first_index(&base, &v.label)).collect();
            let mut edges = Vec::new();
            for (a, b) in c.edges() {
                let (a, b) = (map[a], map[b]);
                if is_t[b] {
                    return Err(Error::invalid(format!(
                        "mixture vertex `{}` has a parent in component {}",
                        base[b].label,
                        j + 1
                    )));
                }
                edges.push((a, b));
            }
            comps.push(Dag::from_edges(base.clone(), edges)?);
        }

        // expanded vertex list: merged T first-come, then copies per component
        let mut verts = Vec::new();
        let mut prime = vec![Vec::new(); base.len()];
        let mut origin = Vec::new();
        for (v, bv) in base.iter().enumerate() {
            if is_t[v] {
                prime[v].push(verts.len());
                origin.push((v, None));
                verts.push(bv.clone());
            }
        }
        for j in 0..comps.len() {
            for (v, bv) in base.iter().enumerate() {
                if !is_t[v] {
                    prime[v].push(verts.len());
                    origin.push((v, Some(j)));
                    verts.push(Vertex { label: copy_label(&bv.label, j), role: bv.role, wave: bv.wave });
                }
            }
        }
        let copy = |v: usize, j: usize| -> usize {
            if is_t[v] {
                prime[v][0]
            } else {
                prime[v][j]
            }
        };
        let mut expanded = Dag::new(verts)?;
        for (j, c) in comps.iter().enumerate() {
            for (a, b) in c.edges() {
                expanded.add_edge(copy(a, j), copy(b, j))?;
            }
        }
        Ok(MixtureGraph { base, components: comps, expanded, prime, origin })
    }

    /// Convenience constructor from labelled edge lists.
    pub fn from_edges(vertices: &[Vertex], components: &[Vec<(&str, &str)>], t_names: &[&str]) -> Result<Self> {
        let dags = components
            .iter()
            .map(|edges| Dag::from_labeled_edges(vertices.to_vec(), edges.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        MixtureGraph::build(&dags, t_names)
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn base(&self) -> &[Vertex] {
        &self.base
    }

    pub fn components(&self) -> &[Dag] {
        &self.components
    }

    pub fn expanded(&self) -> &Dag {
        &self.expanded
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.base.iter().position(|v| v.label == label)
    }

    pub fn label(&self, v: usize) -> &str {
        &self.base[v].label
    }

    /// Copies of base vertex `v` in the expanded graph.
    pub fn prime(&self, v: usize) -> &[usize] {
        &self.prime[v]
    }

    /// Base vertex and component of an expanded vertex.
    pub fn origin(&self, x: usize) -> (usize, Option<usize>) {
        self.origin[x]
    }

    pub fn mixture_vertices(&self) -> VertexSet {
        self.with_role(Role::Mixture)
    }

    pub fn with_role(&self, role: Role) -> VertexSet {
        (0..self.base.len()).filter(|&v| self.base[v].role == role).collect()
    }

    pub fn observed(&self) -> Vec<usize> {
        self.with_role(Role::Observed).into_iter().collect()
    }

    pub fn selection(&self) -> VertexSet {
        self.with_role(Role::Selection)
    }

    /// `A′`: the union of copies of every vertex in `a`.
    pub fn expand(&self, a: &VertexSet) -> Result<VertexSet> {
        a.iter()
            .map(|&v| {
                self.prime.get(v).ok_or_else(|| Error::UnknownVertex(format!("#{v}"))).map(|p| p.iter().copied())
            })
            .try_fold(VertexSet::new(), |mut acc, p| {
                acc.extend(p?);
                Ok(acc)
            })
    }

    /// Grouped d-separation `a′ ⊥ b′ | c′` in the mixture graph.
    pub fn grouped_d_separated(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        crate::graph::check_disjoint(&self.base, &[a, b, c])?;
        let (ea, eb, ec) = (self.expand(a)?, self.expand(b)?, self.expand(c)?);
        dsep::d_separated(&self.expanded, &ea, &eb, &ec)
    }

    /// Union of the component edge relations over the base vertices.
    pub fn fused(&self) -> FusedGraph {
        let mut f = DirectedGraph::new(self.base.clone()).expect("labels already unique");
        for c in &self.components {
            for (a, b) in c.edges() {
                f.add_edge(a, b).expect("valid component edge");
            }
        }
        f
    }
}

fn first_index(base: &[Vertex], label: &str) -> usize {
    base.iter().position(|v| v.label == label).expect("label checked")
}

pub fn build_mixture_graph(components: &[Dag], t_names: &[&str]) -> Result<MixtureGraph> {
    MixtureGraph::build(components, t_names)
}

pub fn build_fused_graph(m: &MixtureGraph) -> FusedGraph {
    m.fused()
}

pub fn grouped_d_separated(m: &MixtureGraph, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
    m.grouped_d_separated(a, b, c)
}

/// A query where the fused graph separates but the mixture graph does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

/// Samples `trials` random disjoint triples over the non-mixture vertices
/// and reports every query where d-separation in the fused graph does not
/// carry over to grouped d-separation in `m`.
pub fn fused_implies_mixture_check<R: Rng + ?Sized>(
    m: &MixtureGraph,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<Violation>> {
    let f = m.fused();
    let pool: Vec<usize> = (0..m.base.len()).filter(|&v| m.base[v].role != Role::Mixture).collect();
    let mut out = Vec::new();
    if pool.len() < 2 {
        return Ok(out);
    }
    for _ in 0..trials {
        let (a, b, c) = random_triple(&pool, rng);
        if dsep::d_separated(&f, &a, &b, &c)? && !m.grouped_d_separated(&a, &b, &c)? {
            let names = |s: &VertexSet| crate::graph::labels_of(&m.base, s);
            out.push(Violation { a: names(&a), b: names(&b), c: names(&c) });
        }
    }
    Ok(out)
}

/// Random disjoint `(a, b, c)` with `a`, `b` non-empty.
pub(crate) fn random_triple<R: Rng + ?Sized>(pool: &[usize], rng: &mut R) -> (VertexSet, VertexSet, VertexSet) {
    loop {
        let (mut a, mut b, mut c) = (VertexSet::new(), VertexSet::new(), VertexSet::new());
        for &v in pool {
            match rng.random_range(0..6) {
                0 => {
                    a.insert(v);
                }
                1 => {
                    b.insert(v);
                }
                2 | 3 => {
                    c.insert(v);
                }
                _ => {}
            }
        }
        if !a.is_empty() && !b.is_empty() {
            return (a, b, c);
        }
    }
}
