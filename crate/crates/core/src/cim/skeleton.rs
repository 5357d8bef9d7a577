use rayon::prelude::*;

use super::{for_each_subset, pair, query_error, wave_adjacency, CimConfig, Ranking, SepMap, WaveAssignment};
use crate::ci::CiTest;
use crate::error::{Error, Result};
use crate::graph::{MixedGraph, VertexSet};

/// Level-wise skeleton search with wave-restricted conditioning sets.
///
/// For the ordered pair `(i, j)` the candidates are the neighbours of `i`
/// whose wave lies between the waves of `i` and `j`, minus `j`. Adjacencies
/// are frozen for the duration of a level and deletions are applied at the
/// end of it. The first separating set found is recorded.
pub fn cim_skeleton<C: CiTest + ?Sized>(
    ci: &C,
    waves: &WaveAssignment,
    cfg: &CimConfig,
) -> Result<(MixedGraph, SepMap)> {
    let n = waves.len();
    if ci.num_vars() != n {
        return Err(Error::invalid(format!(
            "CI backend has {} variables but the wave assignment lists {n}",
            ci.num_vars()
        )));
    }
    let rk = Ranking::new(waves.labels());
    let mut est = MixedGraph::complete(waves.vertices());
    let mut sep = SepMap::new();
    let candidates = |g: &MixedGraph, i: usize, j: usize| -> Vec<usize> {
        let mut c = wave_adjacency(g, waves, i, waves.wave(i), waves.wave(j));
        c.remove(&j);
        rk.sorted(c.into_iter().collect())
    };

    let mut level = 0usize;
    loop {
        if cfg.max_cond.is_some_and(|m| level > m) {
            break;
        }
        // ordered by label rank so results do not depend on column order
        let mut pairs: Vec<(usize, usize)> =
            est.edges().into_iter().map(|(u, v, _, _)| rk.ordered(u, v)).collect();
        pairs.sort_by_key(|&(u, v)| (rk.rank[u], rk.rank[v]));
        let frozen = &est;
        let found: Vec<Option<VertexSet>> = pairs
            .par_iter()
            .map(|&(u, v)| -> Result<Option<VertexSet>> {
                for (a, b) in [(u, v), (v, u)] {
                    let cand = candidates(frozen, a, b);
                    let mut hit = None;
                    for_each_subset(&cand, level, |w| {
                        let d = ci.test(u, v, w).map_err(|e| query_error(waves.labels(), u, v, w, e))?;
                        if d.independent {
                            hit = Some(w.iter().copied().collect::<VertexSet>());
                        }
                        Ok(d.independent)
                    })?;
                    if hit.is_some() {
                        return Ok(hit);
                    }
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        for (&(u, v), w) in pairs.iter().zip(found) {
            if let Some(w) = w {
                est.remove_edge(u, v);
                sep.insert(pair(u, v), w);
            }
        }
        // stop once no ordered pair has more than `level` candidates
        let remaining = est.edges();
        let more = remaining.iter().any(|&(u, v, _, _)| {
            candidates(&est, u, v).len() > level || candidates(&est, v, u).len() > level
        });
        if !more {
            break;
        }
        level += 1;
    }
    Ok((est, sep))
}
