//! Randomised property suites over oracle instances, shared by the
//! acceptance harness and the `oracle-check` command.
//!
//! Instance `i` of a suite draws from stream `i` of the suite seed, so a
//! failing instance can be replayed on its own.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ci::{exact_discrete_ci, CiTest, OracleCi};
use crate::cim::{run_cim, CimConfig, PriorKnowledge};
use crate::error::Result;
use crate::graph::{dsep, labels_of, Dag, Digraph, Mark, Vertex, VertexSet};
use crate::mixture::discrete::random_discrete_mixture;
use crate::mixture::random::{random_mixture, RandomMixture, RandomMixtureConfig};
use crate::mixture::{build_indistinguishable_pair, fixtures, fused_implies_mixture_check, ground_truth_endpoints, MixtureGraph};

/// Summary of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub instances: usize,
    pub queries: usize,
    pub failures: usize,
    /// Largest factorisation residual over separated queries (Markov suite).
    pub max_residual: Option<f64>,
    /// First few failures, for diagnosis.
    pub examples: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn merge(name: &str, parts: Vec<Part>) -> SuiteOutcome {
        let mut out = SuiteOutcome {
            name: name.to_string(),
            instances: parts.len(),
            queries: 0,
            failures: 0,
            max_residual: None,
            examples: Vec::new(),
        };
        for p in parts {
            out.queries += p.queries;
            out.failures += p.failures.len();
            if let Some(r) = p.residual {
                out.max_residual = Some(out.max_residual.map_or(r, |m: f64| m.max(r)));
            }
            for f in p.failures {
                if out.examples.len() < 10 {
                    out.examples.push(f);
                }
            }
        }
        out
    }
}

#[derive(Default)]
struct Part {
    queries: usize,
    failures: Vec<String>,
    residual: Option<f64>,
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn run_parts<F>(name: &str, instances: usize, f: F) -> Result<SuiteOutcome>
where
    F: Fn(usize) -> Result<Part> + Sync,
{
    let parts = (0..instances).into_par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    Ok(SuiteOutcome::merge(name, parts))
}

/// Calls `f(a, b, c)` for every assignment of `vars` to `a`, `b`, `c` or
/// none with `a` and `b` non-empty and `a` preceding `b` by smallest
/// element.
fn all_triples<F: FnMut(&VertexSet, &VertexSet, &VertexSet) -> Result<()>>(vars: &[usize], mut f: F) -> Result<()> {
    let k = vars.len() as u32;
    for code in 0..4usize.pow(k) {
        let (mut a, mut b, mut c) = (VertexSet::new(), VertexSet::new(), VertexSet::new());
        let mut rem = code;
        for &v in vars {
            match rem % 4 {
                1 => a.insert(v),
                2 => b.insert(v),
                3 => c.insert(v),
                _ => false,
            };
            rem /= 4;
        }
        if a.is_empty() || b.is_empty() || a.first() > b.first() {
            continue;
        }
        f(&a, &b, &c)?;
    }
    Ok(())
}

/// Mixtures of binary CPT DAGs: every grouped d-separation among the
/// non-mixture variables must factorise exactly in the enumerated joint.
pub fn markov_suite(instances: usize, seed: u64, tol: f64) -> Result<SuiteOutcome> {
    run_parts("global Markov property", instances, |i| {
        let mut rng = stream(seed, i);
        let dm = random_discrete_mixture(&mut rng)?;
        let table = dm.observed_joint()?;
        let xs = dm.observed_vertices();
        let pos: Vec<usize> = (0..xs.len()).collect();
        let mut part = Part { residual: Some(0.0), ..Part::default() };
        all_triples(&pos, |a, b, c| {
            let map = |s: &VertexSet| -> VertexSet { s.iter().map(|&p| xs[p]).collect() };
            if !dm.graph.grouped_d_separated(&map(a), &map(b), &map(c))? {
                return Ok(());
            }
            part.queries += 1;
            let v = |s: &VertexSet| s.iter().copied().collect::<Vec<_>>();
            let d = exact_discrete_ci(&table, &v(a), &v(b), &v(c), tol)?;
            part.residual = part.residual.map(|r| r.max(d.statistic));
            if !d.independent {
                part.failures.push(format!(
                    "instance {i}: {:?} _||_ {:?} | {:?} has residual {:.3e}",
                    table_labels(table.labels(), a),
                    table_labels(table.labels(), b),
                    table_labels(table.labels(), c),
                    d.statistic
                ));
            }
            Ok(())
        })?;
        Ok(part)
    })
}

fn table_labels(labels: &[String], s: &VertexSet) -> Vec<String> {
    s.iter().map(|&v| labels[v].clone()).collect()
}

/// Random mixtures: fused-graph d-separation must imply grouped
/// d-separation.
pub fn proposition1_suite(instances: usize, queries: usize, seed: u64) -> Result<SuiteOutcome> {
    let cfg = RandomMixtureConfig::default();
    run_parts("fused separation implies mixture separation", instances, |i| {
        let mut rng = stream(seed, i);
        let rm = random_mixture(&cfg, &mut rng)?;
        let v = fused_implies_mixture_check(&rm.graph, queries, &mut rng)?;
        Ok(Part {
            queries,
            failures: v.into_iter().map(|x| format!("instance {i}: {:?} | {:?} | {:?}", x.a, x.b, x.c)).collect(),
            residual: None,
        })
    })
}

/// The Figure 3 mixture separates X1 and X3 while its fused graph does not.
pub fn figure3_witness() -> Result<bool> {
    let m = fixtures::figure3();
    let s = |l: &str| -> VertexSet { [m.index_of(l).expect("fixture label")].into() };
    let none = VertexSet::new();
    Ok(m.grouped_d_separated(&s("X1"), &s("X3"), &none)? && !dsep::d_separated(&m.fused(), &s("X1"), &s("X3"), &none)?)
}

/// Oracle CIM on random mixtures never contradicts the ancestral truth.
pub fn soundness_suite(instances: usize, seed: u64, cfg: &RandomMixtureConfig) -> Result<SuiteOutcome> {
    run_parts("oracle soundness", instances, |i| {
        let mut rng = stream(seed, i);
        let rm = random_mixture(cfg, &mut rng)?;
        let truth = ground_truth_endpoints(&rm.graph, &rm.waves)?;
        let o = OracleCi::new(&rm.graph, rm.waves.labels())?;
        let out = run_cim(&o, &rm.waves, &PriorKnowledge::none(), &CimConfig::default())?;
        let bad = truth.contradictions(&out.graph)?;
        let mut part = Part { queries: 2 * out.graph.edge_count(), ..Part::default() };
        for c in bad {
            part.failures.push(format!("instance {i}: {} at {} on {} - {}", c.mark, c.at, c.at, c.other));
        }
        for c in out.conflicts {
            part.failures.push(format!("instance {i}: conflict {c}"));
        }
        Ok(part)
    })
}

/// Every DAG on `n` labelled vertices, as edge lists over `0..n`.
pub fn all_dags(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let vertices: Vec<Vertex> = (0..n).map(|v| Vertex::observed(format!("V{v}"), None)).collect();
    let mut out = Vec::new();
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut rem = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match rem % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            rem /= 3;
        }
        if Dag::from_edges(vertices.clone(), edges.iter().copied()).is_ok() {
            out.push(edges);
        }
    }
    out
}

fn compare_deciders(dag: &Dag, a: &VertexSet, b: &VertexSet, c: &VertexSet, part: &mut Part, tag: &str) -> Result<()> {
    part.queries += 1;
    let path = dsep::d_separated(dag, a, b, c)?;
    let moral = dag.d_separated_moral(a, b, c)?;
    if path != moral {
        part.failures.push(format!(
            "{tag}: {:?} | {:?} | {:?} path={path} moral={moral}",
            labels_of(dag.vertices(), a),
            labels_of(dag.vertices(), b),
            labels_of(dag.vertices(), c)
        ));
    }
    Ok(())
}

/// Path-based and moralisation deciders agree on every DAG with
/// `exhaustive_n` vertices and every disjoint triple, and on `random`
/// random DAGs with `random_n` vertices.
pub fn dsep_equivalence_suite(exhaustive_n: usize, random: usize, random_n: usize, seed: u64) -> Result<SuiteOutcome> {
    let vertices = |n: usize| -> Vec<Vertex> { (0..n).map(|v| Vertex::observed(format!("V{v}"), None)).collect() };
    let dags = all_dags(exhaustive_n);
    let all: Vec<usize> = (0..exhaustive_n).collect();
    let mut parts = dags
        .par_iter()
        .enumerate()
        .map(|(k, edges)| {
            let dag = Dag::from_edges(vertices(exhaustive_n), edges.iter().copied())?;
            let mut part = Part::default();
            all_triples(&all, |a, b, c| compare_deciders(&dag, a, b, c, &mut part, &format!("dag {k}")))?;
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;
    let spot = (0..random)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut order: Vec<usize> = (0..random_n).collect();
            order.shuffle(&mut rng);
            let density = rng.random_range(0.1..0.6);
            let mut edges = Vec::new();
            for x in 0..random_n {
                for y in x + 1..random_n {
                    if rng.random_bool(density) {
                        edges.push((order[x], order[y]));
                    }
                }
            }
            let dag = Dag::from_edges(vertices(random_n), edges)?;
            let pool: Vec<usize> = (0..random_n).collect();
            let (a, b, c) = crate::mixture::random_triple(&pool, &mut rng);
            let mut part = Part::default();
            compare_deciders(&dag, &a, &b, &c, &mut part, &format!("random {i}"))?;
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;
    parts.extend(spot);
    let mut out = SuiteOutcome::merge("d-separation decider agreement", parts);
    out.instances = dags.len() + random;
    Ok(out)
}

/// A pair `(oi, oj)` of observed vertices in the same wave with `oj`
/// varying across components and `oi ∉ Anc_F(oj ∪ S)`.
fn pick_indist_pair<R: Rng + ?Sized>(rm: &RandomMixture, rng: &mut R) -> Result<Option<(usize, usize)>> {
    let m = &rm.graph;
    let f = m.fused();
    let obs = m.observed();
    let mut cands = Vec::new();
    for &oj in &obs {
        if !rm.varying[oj] {
            continue;
        }
        let mut target = m.selection();
        target.insert(oj);
        let anc = f.ancestors(&target)?;
        for &oi in &obs {
            if oi != oj && m.base()[oi].wave == m.base()[oj].wave && !anc.contains(&oi) {
                cands.push((oi, oj));
            }
        }
    }
    Ok(cands.choose(rng).copied())
}

/// Observed query agreement between two mixtures: exhaustive over set
/// triples when there are at most five observed variables, sampled
/// otherwise. Returns (queries, mismatches).
fn compare_queries<R: Rng + ?Sized>(
    m1: &MixtureGraph,
    m2: &MixtureGraph,
    labels: &[String],
    rng: &mut R,
    samples: usize,
) -> Result<(usize, Vec<String>)> {
    let o1 = OracleCi::new(m1, labels)?;
    let o2 = OracleCi::new(m2, labels)?;
    let map = |o: &OracleCi<'_>, s: &VertexSet| -> VertexSet { s.iter().map(|&p| o.vars()[p]).collect() };
    let s1 = m1.selection();
    let s2 = m2.selection();
    let mut queries = 0;
    let mut bad = Vec::new();
    let mut check = |a: &VertexSet, b: &VertexSet, c: &VertexSet| -> Result<()> {
        queries += 1;
        let c1: VertexSet = map(&o1, c).union(&s1).copied().collect();
        let c2: VertexSet = map(&o2, c).union(&s2).copied().collect();
        let r1 = m1.grouped_d_separated(&map(&o1, a), &map(&o1, b), &c1)?;
        let r2 = m2.grouped_d_separated(&map(&o2, a), &map(&o2, b), &c2)?;
        if r1 != r2 {
            let names = |s: &VertexSet| s.iter().map(|&p| labels[p].clone()).collect::<Vec<_>>();
            bad.push(format!("{:?} | {:?} | {:?}: m1 {r1}, m2 {r2}", names(a), names(b), names(c)));
        }
        Ok(())
    };
    let pos: Vec<usize> = (0..labels.len()).collect();
    if labels.len() <= 5 {
        all_triples(&pos, &mut check)?;
    } else {
        for _ in 0..samples {
            let (a, b, c) = crate::mixture::random_triple(&pos, rng);
            check(&a, &b, &c)?;
        }
        // every single-variable query is also covered
        for &x in &pos {
            for &y in &pos[x + 1..] {
                let rest: Vec<usize> = pos.iter().copied().filter(|&v| v != x && v != y).collect();
                for mask in 0..1usize << rest.len() {
                    let c: VertexSet = rest.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
                    check(&[x].into(), &[y].into(), &c)?;
                }
            }
        }
    }
    Ok((queries, bad))
}

/// Pairs of mixtures that agree on every observed query but differ in
/// fused ancestry; oracle CIM must not tell them apart.
pub fn indistinguishability_suite(pairs: usize, seed: u64) -> Result<SuiteOutcome> {
    let cfg = RandomMixtureConfig { observed: 3..=7, varying_prob: 0.5, ..RandomMixtureConfig::default() };
    run_parts("indistinguishable mixtures", pairs, |i| {
        let mut rng = stream(seed, i);
        let (rm, (oi, oj)) = loop {
            let rm = random_mixture(&cfg, &mut rng)?;
            if let Some(p) = pick_indist_pair(&rm, &mut rng)? {
                break (rm, p);
            }
        };
        let m1 = &rm.graph;
        let m2 = build_indistinguishable_pair(m1, oi, oj)?;
        let labels = rm.waves.labels().to_vec();
        let (queries, mut failures) = compare_queries(m1, &m2, &labels, &mut rng, 400)?;
        for f in &mut failures {
            *f = format!("instance {i}: {f}");
        }

        let w2 = rm.waves.clone();
        let t1 = ground_truth_endpoints(m1, &rm.waves)?;
        let t2 = ground_truth_endpoints(&m2, &w2)?;
        let pi = rm.waves.index_of(m1.label(oi)).expect("observed");
        let pj = rm.waves.index_of(m1.label(oj)).expect("observed");
        if t1.is_ancestor(pi, pj) || !t2.is_ancestor(pi, pj) {
            failures.push(format!("instance {i}: ancestry of {} to {} did not change", m1.label(oi), m1.label(oj)));
        }

        let g1 = run_cim(&OracleCi::new(m1, &labels)?, &rm.waves, &PriorKnowledge::none(), &CimConfig::default())?.graph;
        let g2 = run_cim(&OracleCi::new(&m2, &labels)?, &w2, &PriorKnowledge::none(), &CimConfig::default())?.graph;
        if g1 != g2 {
            failures.push(format!("instance {i}: CIM outputs differ"));
        }
        // the arrowhead at Oi is invalidated by the second mixture
        if g1.mark_at(pj, pi) == Some(Mark::Arrow) {
            failures.push(format!("instance {i}: arrowhead at {} on {} - {}", m1.label(oi), m1.label(oi), m1.label(oj)));
        }
        Ok(Part { queries, failures, residual: None })
    })
}

/// Permuting the column order leaves the CIM output unchanged.
pub fn order_independence_suite(instances: usize, seed: u64) -> Result<SuiteOutcome> {
    let cfg = RandomMixtureConfig::default();
    run_parts("column order independence", instances, |i| {
        let mut rng = stream(seed, i);
        let rm = random_mixture(&cfg, &mut rng)?;
        let labels = rm.waves.labels().to_vec();
        let mut perm = labels.clone();
        perm.shuffle(&mut rng);
        let w2 = rm.waves.reordered(&perm)?;
        let g1 = run_cim(&OracleCi::new(&rm.graph, &labels)?, &rm.waves, &PriorKnowledge::none(), &CimConfig::default())?.graph;
        let g2 = run_cim(&OracleCi::new(&rm.graph, &perm)?, &w2, &PriorKnowledge::none(), &CimConfig::default())?.graph;
        let mut part = Part { queries: 1, ..Part::default() };
        if g1.labeled_edges() != g2.labeled_edges() {
            part.failures.push(format!("instance {i}: output depends on column order {perm:?}"));
        }
        Ok(part)
    })
}

/// Checks a CI backend against the oracle on the same variables: the
/// fraction of queries with matching decisions.
pub fn agreement_rate<A: CiTest + ?Sized, B: CiTest + ?Sized>(a: &A, b: &B, queries: &[(usize, usize, Vec<usize>)]) -> Result<f64> {
    if queries.is_empty() {
        return Ok(1.0);
    }
    let mut hit = 0;
    for (x, y, c) in queries {
        if a.test(*x, *y, c)?.independent == b.test(*x, *y, c)?.independent {
            hit += 1;
        }
    }
    Ok(hit as f64 / queries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_counts() {
        // labelled DAG counts 1, 3, 25, 543
        assert_eq!(all_dags(1).len(), 1);
        assert_eq!(all_dags(2).len(), 3);
        assert_eq!(all_dags(3).len(), 25);
        assert_eq!(all_dags(4).len(), 543);
    }

    #[test]
    fn triple_enumeration_counts() {
        let mut n = 0;
        all_triples(&[0, 1, 2], |a, b, c| {
            assert!(a.is_disjoint(b) && a.is_disjoint(c) && b.is_disjoint(c));
            n += 1;
            Ok(())
        })
        .unwrap();
        // direct count over base-4 digit assignments
        let mut want = 0;
        for code in 0..64usize {
            let digits: Vec<usize> = (0..3).map(|k| code >> (2 * k) & 3).collect();
            let a: Vec<usize> = (0..3).filter(|&k| digits[k] == 1).collect();
            let b: Vec<usize> = (0..3).filter(|&k| digits[k] == 2).collect();
            if !a.is_empty() && !b.is_empty() && a[0] < b[0] {
                want += 1;
            }
        }
        assert_eq!(n, want);
    }

    #[test]
    fn small_suites_pass() {
        assert!(markov_suite(5, 1, 1e-9).unwrap().passed());
        assert!(proposition1_suite(10, 20, 2).unwrap().passed());
        assert!(figure3_witness().unwrap());
        assert!(soundness_suite(10, 3, &RandomMixtureConfig::default()).unwrap().passed());
        assert!(dsep_equivalence_suite(3, 20, 6, 4).unwrap().passed());
        assert!(indistinguishability_suite(3, 5).unwrap().passed());
        assert!(order_independence_suite(5, 6).unwrap().passed());
    }

    #[test]
    fn markov_suite_reports_residuals() {
        let out = markov_suite(3, 7, 1e-9).unwrap();
        assert!(out.queries > 0);
        assert!(out.max_residual.unwrap() <= 1e-9);
    }
}
