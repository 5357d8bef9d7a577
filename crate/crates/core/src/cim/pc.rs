use super::{cim_skeleton, pair, CimConfig, Ranking, WaveAssignment};
use crate::ci::CiTest;
use crate::error::Result;
use crate::graph::{Mark, MixedGraph};

/// PC-stable with the same wave-restricted skeleton and tiered background
/// knowledge: edges between waves point forward, then unshielded colliders
/// from the separating sets, then Meek's rules. A collider that would point
/// into an earlier wave is skipped; two colliders claiming the same edge
/// leave the later one (label order), so no edge is bidirected. Remaining
/// circles become tails, so the output has tails and arrowheads only.
pub fn pc_stable_baseline<C: CiTest + ?Sized>(ci: &C, waves: &WaveAssignment, cfg: &CimConfig) -> Result<MixedGraph> {
    let (mut g, sep) = cim_skeleton(ci, waves, cfg)?;
    let rk = Ranking::new(waves.labels());

    // unshielded colliders, all decided on the skeleton
    let mut arrows = Vec::new();
    for &j in &rk.order {
        let nbrs = rk.sorted(g.neighbors(j).collect());
        for (x, &i) in nbrs.iter().enumerate() {
            for &k in &nbrs[x + 1..] {
                if g.adjacent(i, k) {
                    continue;
                }
                if sep.get(&pair(i, k)).is_some_and(|s| !s.contains(&j)) {
                    arrows.push((i, j));
                    arrows.push((k, j));
                }
            }
        }
    }
    for (u, v, _, _) in g.edges() {
        if waves.wave(u) < waves.wave(v) {
            orient(&mut g, u, v)?;
        } else if waves.wave(v) < waves.wave(u) {
            orient(&mut g, v, u)?;
        }
    }
    for (i, j) in arrows {
        if waves.wave(i) <= waves.wave(j) {
            orient(&mut g, i, j)?;
        }
    }
    meek(&mut g, &rk)?;
    for (u, v, mu, mv) in g.edges() {
        if mu == Mark::Circle {
            g.set_mark(v, u, Mark::Tail)?;
        }
        if mv == Mark::Circle {
            g.set_mark(u, v, Mark::Tail)?;
        }
    }
    Ok(g)
}

fn undirected(g: &MixedGraph, a: usize, b: usize) -> bool {
    g.mark_at(a, b) == Some(Mark::Circle) && g.mark_at(b, a) == Some(Mark::Circle)
}

fn directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    g.mark_at(a, b) == Some(Mark::Arrow) && g.mark_at(b, a) != Some(Mark::Arrow)
}

fn orient(g: &mut MixedGraph, a: usize, b: usize) -> Result<()> {
    g.set_mark(a, b, Mark::Arrow)?;
    g.set_mark(b, a, Mark::Tail)
}

/// Meek's rules R1-R4 on the edges where both marks are still circles.
fn meek(g: &mut MixedGraph, rk: &Ranking) -> Result<()> {
    loop {
        let mut changed = false;
        for &a in &rk.order {
            for b in rk.sorted(g.neighbors(a).collect()) {
                if !undirected(g, a, b) {
                    continue;
                }
                if rule_applies(g, a, b) {
                    orient(g, a, b)?;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Whether `a - b` should become `a -> b`.
fn rule_applies(g: &MixedGraph, a: usize, b: usize) -> bool {
    let nb_a: Vec<usize> = g.neighbors(a).collect();
    // R1: c -> a - b, c and b non-adjacent
    if nb_a.iter().any(|&c| c != b && directed(g, c, a) && !g.adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b
    if nb_a.iter().any(|&c| c != b && directed(g, a, c) && g.adjacent(c, b) && directed(g, c, b)) {
        return true;
    }
    // R3: a - c -> b, a - d -> b, c and d non-adjacent
    let mids: Vec<usize> = nb_a
        .iter()
        .copied()
        .filter(|&c| c != b && undirected(g, a, c) && g.adjacent(c, b) && directed(g, c, b))
        .collect();
    for (x, &c) in mids.iter().enumerate() {
        if mids[x + 1..].iter().any(|&d| !g.adjacent(c, d)) {
            return true;
        }
    }
    // R4: a - d -> c -> b, a adjacent to c, d and b non-adjacent
    for &d in &nb_a {
        if d == b || !undirected(g, a, d) || g.adjacent(d, b) {
            continue;
        }
        for c in g.neighbors(d) {
            if c != a && c != b && directed(g, d, c) && g.adjacent(a, c) && g.adjacent(c, b) && directed(g, c, b) {
                return true;
            }
        }
    }
    false
}
