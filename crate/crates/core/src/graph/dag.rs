use std::collections::BTreeSet;

use super::dsep;
use super::{check_disjoint, to_mask, Digraph, DirectedGraph, Vertex, VertexSet};
use crate::error::{Error, Result};

/// Directed acyclic graph. Every mutation preserves acyclicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    inner: DirectedGraph,
}

impl Dag {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        Ok(Dag { inner: DirectedGraph::new(vertices)? })
    }

    pub fn from_edges<I>(vertices: Vec<Vertex>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut dag = Dag::new(vertices)?;
        for (a, b) in edges {
            dag.add_edge(a, b)?;
        }
        Ok(dag)
    }

    /// Builds from labelled edges, e.g. `[("A", "B")]`.
    pub fn from_labeled_edges<'a, I>(vertices: Vec<Vertex>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut dag = Dag::new(vertices)?;
        for (a, b) in edges {
            let ia = dag.index_of(a).ok_or_else(|| Error::UnknownVertex(a.to_string()))?;
            let ib = dag.index_of(b).ok_or_else(|| Error::UnknownVertex(b.to_string()))?;
            dag.add_edge(ia, ib)?;
        }
        Ok(dag)
    }

    /// Wraps a directed graph after verifying it has no cycle.
    pub fn try_from_graph(graph: DirectedGraph) -> Result<Self> {
        if graph.is_acyclic() {
            return Ok(Dag { inner: graph });
        }
        let edge = graph
            .edges()
            .into_iter()
            .find(|&(a, b)| graph.reaches(b, a))
            .expect("cyclic graph has an edge on a cycle");
        Err(Error::Cycle {
            from: graph.label(edge.0).to_string(),
            to: graph.label(edge.1).to_string(),
        })
    }

    /// Inserts `from -> to`, rejecting it if it would close a directed cycle.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        let n = self.inner.n();
        if from < n && to < n && from != to && self.inner.reaches(to, from) {
            return Err(Error::Cycle {
                from: self.inner.label(from).to_string(),
                to: self.inner.label(to).to_string(),
            });
        }
        self.inner.add_edge(from, to)
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.inner.edges()
    }

    pub fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    pub fn as_graph(&self) -> &DirectedGraph {
        &self.inner
    }

    pub fn into_graph(self) -> DirectedGraph {
        self.inner
    }

    pub fn push_vertex(&mut self, vertex: Vertex) -> Result<usize> {
        self.inner.push_vertex(vertex)
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.inner.topological_order().expect("acyclic by construction")
    }

    /// Path-based d-separation (reachability traversal).
    ///
    /// True iff no path between `a` and `b` is active given `c`; empty `a` or
    /// `b` is vacuously separated.
    pub fn d_separated(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        dsep::d_separated(self, a, b, c)
    }

    /// d-separation via the moral graph of the smallest ancestral set of
    /// `a ∪ b ∪ c`. Independent of [`Dag::d_separated`]; the two must agree.
    pub fn d_separated_moral(&self, a: &VertexSet, b: &VertexSet, c: &VertexSet) -> Result<bool> {
        let n = self.n();
        check_disjoint(self.vertices(), &[a, b, c])?;
        let ma = to_mask(n, a)?;
        let mb = to_mask(n, b)?;
        let mc = to_mask(n, c)?;
        if a.is_empty() || b.is_empty() {
            return Ok(true);
        }
        let all: Vec<bool> = (0..n).map(|v| ma[v] || mb[v] || mc[v]).collect();
        let keep = self.ancestor_mask(&all);

        // moral graph restricted to the ancestral set
        let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for v in (0..n).filter(|&v| keep[v]) {
            let ps = self.parents(v);
            for (k, &p) in ps.iter().enumerate() {
                nbrs[v].insert(p);
                nbrs[p].insert(v);
                for &q in &ps[k + 1..] {
                    nbrs[p].insert(q);
                    nbrs[q].insert(p);
                }
            }
        }

        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = a.iter().copied().collect();
        for &v in a {
            seen[v] = true;
        }
        while let Some(v) = stack.pop() {
            if mb[v] {
                return Ok(false);
            }
            for &w in &nbrs[v] {
                if !seen[w] && !mc[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok(true)
    }
}

impl Digraph for Dag {
    fn vertices(&self) -> &[Vertex] {
        self.inner.vertices()
    }

    fn parents(&self, v: usize) -> &[usize] {
        self.inner.parents(v)
    }

    fn children(&self, v: usize) -> &[usize] {
        self.inner.children(v)
    }
}

/// True iff `w ∪ s` d-separates `oi` and `oj` while no `v ∪ s` with `v` a
/// proper subset of `w` does. `s` is held fixed; only `w` is shrunk.
pub fn minimal_separating_set_check(
    g: &Dag,
    oi: usize,
    oj: usize,
    w: &VertexSet,
    s: &VertexSet,
) -> Result<bool> {
    if w.contains(&oi) || w.contains(&oj) || s.contains(&oi) || s.contains(&oj) {
        return Err(Error::invalid("endpoints must lie outside the conditioning sets"));
    }
    check_disjoint(g.vertices(), &[w, s])?;
    let a: VertexSet = [oi].into();
    let b: VertexSet = [oj].into();
    let given = |sub: &VertexSet| -> VertexSet { sub.union(s).copied().collect() };
    if !g.d_separated(&a, &b, &given(w))? {
        return Ok(false);
    }
    let items: Vec<usize> = w.iter().copied().collect();
    // every proper subset; subsets of a separating superset are checked too
    for mask in 0..(1u64 << items.len()) - 1 {
        let sub: VertexSet =
            items.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
        if g.d_separated(&a, &b, &given(&sub))? {
            return Ok(false);
        }
    }
    Ok(true)
}
