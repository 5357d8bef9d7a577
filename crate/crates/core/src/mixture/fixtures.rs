//! Hand-written mixtures from the worked examples.

use super::MixtureGraph;
use crate::graph::{Role, Vertex};

fn obs(label: &str, wave: u32) -> Vertex {
    Vertex::observed(label, Some(wave))
}

fn mix(label: &str) -> Vertex {
    Vertex::new(label, Role::Mixture)
}

/// Two DAGs where the mixture graph separates X1 and X3 but the fused graph
/// does not. Every vertex is in wave 1.
pub fn figure3() -> MixtureGraph {
    let vs = vec![obs("X1", 1), obs("X2", 1), obs("X3", 1), mix("T1")];
    MixtureGraph::from_edges(
        &vs,
        &[
            vec![("X1", "X2"), ("T1", "X2"), ("T1", "X3")],
            vec![("X2", "X3"), ("T1", "X2"), ("T1", "X3")],
        ],
        &["T1"],
    )
    .expect("valid fixture")
}

/// Two DAGs whose fused graph has the cycle X1 -> X2 -> X4 -> X1.
/// Waves: X1, X2, X4 in wave 1; X3 in wave 2.
pub fn figure4() -> MixtureGraph {
    let vs = vec![obs("X1", 1), obs("X2", 1), obs("X3", 2), obs("X4", 1), mix("T1"), mix("T2")];
    MixtureGraph::from_edges(
        &vs,
        &[
            vec![("X1", "X2"), ("X2", "X4"), ("X2", "X3"), ("T1", "X4"), ("T1", "X1"), ("T2", "X1")],
            vec![("X1", "X2"), ("X2", "X3"), ("X4", "X1"), ("T1", "X1"), ("T1", "X4"), ("T2", "X1")],
        ],
        &["T1", "T2"],
    )
    .expect("valid fixture")
}

/// Two DAGs on which collider-based orientation goes wrong: O1 and O3 are
/// independent although O2 is an ancestor of O3 in the fused graph.
/// Waves: O1 in wave 1; O2, O3 in wave 2.
pub fn figure8() -> MixtureGraph {
    let vs = vec![obs("O1", 1), obs("O2", 2), obs("O3", 2), mix("T1")];
    MixtureGraph::from_edges(
        &vs,
        &[
            vec![("O1", "O2"), ("O3", "O2"), ("T1", "O2"), ("T1", "O3")],
            vec![("O2", "O3"), ("T1", "O2"), ("T1", "O3")],
        ],
        &["T1"],
    )
    .expect("valid fixture")
}
