//! Reachability ("Bayes-ball") d-separation for any directed graph.
//!
//! Works on cyclic graphs as well, with colliders opened when they are
//! ancestors of the conditioning set.

use super::{check_disjoint, to_mask, Digraph, VertexSet};
use crate::error::Result;

#[derive(Clone, Copy)]
enum Dir {
    /// Arrived from a child, moving against edge direction.
    Up,
    /// Arrived from a parent, moving along edge direction.
    Down,
}

/// Mask of vertices d-connected to `sources` given `given`.
///
/// Sources themselves are included. `given` vertices are never reported.
pub fn reachable<G: Digraph + ?Sized>(g: &G, sources: &[bool], given: &[bool]) -> Vec<bool> {
    let n = g.n();
    let anc_given = g.ancestor_mask(given);
    let mut seen_up = vec![false; n];
    let mut seen_down = vec![false; n];
    let mut out = vec![false; n];
    let mut stack: Vec<(usize, Dir)> =
        (0..n).filter(|&v| sources[v]).map(|v| (v, Dir::Up)).collect();

    while let Some((v, dir)) = stack.pop() {
        let seen = match dir {
            Dir::Up => &mut seen_up[v],
            Dir::Down => &mut seen_down[v],
        };
        if *seen {
            continue;
        }
        *seen = true;
        if !given[v] {
            out[v] = true;
        }
        match dir {
            Dir::Up => {
                if !given[v] {
                    stack.extend(g.parents(v).iter().map(|&p| (p, Dir::Up)));
                    stack.extend(g.children(v).iter().map(|&c| (c, Dir::Down)));
                }
            }
            Dir::Down => {
                if !given[v] {
                    stack.extend(g.children(v).iter().map(|&c| (c, Dir::Down)));
                }
                if anc_given[v] {
                    stack.extend(g.parents(v).iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
    }
    out
}

/// `a ⊥_d b | c`. Sets must be pairwise disjoint.
pub fn d_separated<G: Digraph + ?Sized>(
    g: &G,
    a: &VertexSet,
    b: &VertexSet,
    c: &VertexSet,
) -> Result<bool> {
    check_disjoint(g.vertices(), &[a, b, c])?;
    let n = g.n();
    let ma = to_mask(n, a)?;
    let mb = to_mask(n, b)?;
    let mc = to_mask(n, c)?;
    if a.is_empty() || b.is_empty() {
        return Ok(true);
    }
    Ok(d_separated_masks(g, &ma, &mb, &mc))
}

/// Mask-level variant without validation, for hot loops.
pub fn d_separated_masks<G: Digraph + ?Sized>(g: &G, a: &[bool], b: &[bool], c: &[bool]) -> bool {
    let r = reachable(g, a, c);
    !r.iter().zip(b).any(|(&x, &y)| x && y)
}
