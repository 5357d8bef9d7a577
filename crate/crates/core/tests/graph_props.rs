use std::collections::BTreeSet;

use mixdag::graph::{Dag, Digraph, DirectedGraph, Vertex, VertexSet};
use proptest::prelude::*;

/// DAG on `n` vertices: forward edges of a shuffled order.
fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=8).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), pairs)).prop_map(move |(order, bits)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for x in 0..n {
                for y in x + 1..n {
                    if bits[k] {
                        edges.push((order[x], order[y]));
                    }
                    k += 1;
                }
            }
            (n, edges)
        })
    })
}

fn build(n: usize, edges: &[(usize, usize)]) -> Dag {
    let vs = (0..n).map(|v| Vertex::observed(format!("V{v}"), None)).collect();
    Dag::from_edges(vs, edges.iter().copied()).unwrap()
}

/// Disjoint (a, b, c) from a role per vertex: 0 none, 1 a, 2 b, 3 c.
fn split(roles: &[u8]) -> Option<(VertexSet, VertexSet, VertexSet)> {
    let pick = |r: u8| -> VertexSet { roles.iter().enumerate().filter(|(_, &x)| x == r).map(|(v, _)| v).collect() };
    let (a, b, c) = (pick(1), pick(2), pick(3));
    (!a.is_empty() && !b.is_empty()).then_some((a, b, c))
}

proptest! {
    #[test]
    fn path_and_moral_deciders_agree((n, edges) in dag(), roles in proptest::collection::vec(0u8..4, 8)) {
        let g = build(n, &edges);
        if let Some((a, b, c)) = split(&roles[..n]) {
            prop_assert_eq!(g.d_separated(&a, &b, &c).unwrap(), g.d_separated_moral(&a, &b, &c).unwrap());
        }
    }

    #[test]
    fn d_separation_is_symmetric((n, edges) in dag(), roles in proptest::collection::vec(0u8..4, 8)) {
        let g = build(n, &edges);
        if let Some((a, b, c)) = split(&roles[..n]) {
            prop_assert_eq!(g.d_separated(&a, &b, &c).unwrap(), g.d_separated(&b, &a, &c).unwrap());
        }
    }

    #[test]
    fn ancestors_of_union_is_union_of_ancestors((n, edges) in dag(), s1 in proptest::collection::btree_set(0usize..8, 0..4), s2 in proptest::collection::btree_set(0usize..8, 0..4)) {
        let g = build(n, &edges);
        let s1: VertexSet = s1.into_iter().filter(|&v| v < n).collect();
        let s2: VertexSet = s2.into_iter().filter(|&v| v < n).collect();
        let both: VertexSet = s1.union(&s2).copied().collect();
        let mut want = g.ancestors(&s1).unwrap();
        want.extend(g.ancestors(&s2).unwrap());
        prop_assert_eq!(g.ancestors(&both).unwrap(), want);
    }

    #[test]
    fn cycle_creating_edge_is_rejected((n, edges) in dag(), pick in any::<prop::sample::Index>()) {
        let mut g = build(n, &edges);
        // any pair u ~> v yields a cycle when v -> u is added
        let reach: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).filter(|&(u, v)| u != v && g.as_graph().reaches(u, v)).collect();
        if !reach.is_empty() {
            let (u, v) = *pick.get(&reach);
            prop_assert!(g.add_edge(v, u).is_err());
            prop_assert!(g.as_graph().is_acyclic());
            let vs = (0..n).map(|x| Vertex::observed(format!("V{x}"), None)).collect();
            let mut all: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
            all.insert((v, u));
            prop_assert!(Dag::from_edges(vs, all).is_err());
            let plain = DirectedGraph::from_edges((0..n).map(|x| Vertex::observed(format!("V{x}"), None)).collect(), g.edges().into_iter().chain([(v, u)])).unwrap();
            prop_assert!(!plain.is_acyclic());
        }
    }
}
