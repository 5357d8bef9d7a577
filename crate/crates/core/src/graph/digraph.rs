use std::collections::{BTreeSet, HashMap};

use super::{Digraph, Vertex};
use crate::error::{Error, Result};

/// Directed graph with at most one edge per ordered pair. Cycles are allowed;
/// fused graphs use this type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    vertices: Vec<Vertex>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl DirectedGraph {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if seen.insert(v.label.as_str(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vertex label `{}`", v.label)));
            }
        }
        let n = vertices.len();
        Ok(DirectedGraph { vertices, parents: vec![Vec::new(); n], children: vec![Vec::new(); n] })
    }

    pub fn from_edges<I>(vertices: Vec<Vertex>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = DirectedGraph::new(vertices)?;
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Inserts `from -> to`. Re-inserting an existing edge is a no-op.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        let n = self.vertices.len();
        if from >= n {
            return Err(Error::UnknownVertex(format!("#{from}")));
        }
        if to >= n {
            return Err(Error::UnknownVertex(format!("#{to}")));
        }
        if from == to {
            return Err(Error::invalid(format!("self-edge on `{}`", self.vertices[from].label)));
        }
        if let Err(pos) = self.children[from].binary_search(&to) {
            self.children[from].insert(pos, to);
            let ppos = self.parents[to].binary_search(&from).unwrap_err();
            self.parents[to].insert(ppos, from);
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> bool {
        match self.children[from].binary_search(&to) {
            Ok(pos) => {
                self.children[from].remove(pos);
                let ppos = self.parents[to].binary_search(&from).expect("symmetric storage");
                self.parents[to].remove(ppos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(a, cs)| cs.iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn vertex_mut(&mut self, v: usize) -> &mut Vertex {
        &mut self.vertices[v]
    }

    /// Appends a vertex and returns its index.
    pub fn push_vertex(&mut self, vertex: Vertex) -> Result<usize> {
        if self.index_of(&vertex.label).is_some() {
            return Err(Error::invalid(format!("duplicate vertex label `{}`", vertex.label)));
        }
        self.vertices.push(vertex);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        Ok(self.vertices.len() - 1)
    }

    /// True if `to` reaches `from` already, i.e. adding `from -> to` closes a cycle.
    pub fn reaches(&self, src: usize, dst: usize) -> bool {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![src];
        seen[src] = true;
        while let Some(v) = stack.pop() {
            if v == dst {
                return true;
            }
            for &c in &self.children[v] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Kahn topological order, or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

impl Digraph for DirectedGraph {
    fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
}
