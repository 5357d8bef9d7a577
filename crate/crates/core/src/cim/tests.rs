use super::*;
use crate::ci::{CiDecision, OracleCi};
use crate::mixture::{fixtures, ground_truth_endpoints, MixtureGraph};

fn waves_of(m: &MixtureGraph) -> WaveAssignment {
    WaveAssignment::from_vertices(m.base()).unwrap()
}

fn mark(g: &MixedGraph, a: &str, b: &str) -> Option<Mark> {
    g.mark_at(g.index_of(a).unwrap(), g.index_of(b).unwrap())
}

fn idx(w: &WaveAssignment, labels: &[&str]) -> VertexSet {
    labels.iter().map(|l| w.index_of(l).unwrap()).collect()
}

/// Independent exactly for the listed (pair, conditioning set) entries.
struct Listed {
    n: usize,
    indep: Vec<(usize, usize, VertexSet)>,
}

impl CiTest for Listed {
    fn num_vars(&self) -> usize {
        self.n
    }

    fn test(&self, x: usize, y: usize, given: &[usize]) -> Result<CiDecision> {
        let g: VertexSet = given.iter().copied().collect();
        let hit = self.indep.iter().any(|(a, b, s)| pair(*a, *b) == pair(x, y) && *s == g);
        Ok(CiDecision::oracle(hit))
    }
}

fn waves(labels: &[&str], w: &[u32]) -> WaveAssignment {
    WaveAssignment::new(labels.iter().map(|s| s.to_string()).collect(), w.to_vec()).unwrap()
}

#[test]
fn wave_adjacency_ranges() {
    let w = waves(&["A", "B", "C", "D"], &[1, 1, 2, 2]);
    let g = MixedGraph::complete(w.vertices());
    assert_eq!(wave_adjacency(&g, &w, 0, 1, 1), [1].into());
    assert_eq!(wave_adjacency(&g, &w, 0, 2, 1), [1, 2, 3].into());
    assert_eq!(wave_adjacency(&g, &w, 2, 2, 2), [3].into());
}

#[test]
fn wave_adjacency_on_figure4_truth() {
    let m = fixtures::figure4();
    let w = waves_of(&m);
    let t = ground_truth_endpoints(&m, &w).unwrap();
    let x2 = w.index_of("X2").unwrap();
    assert_eq!(wave_adjacency(t.graph(), &w, x2, 1, 2), idx(&w, &["X1", "X4", "X3"]));
}

#[test]
fn subsets_are_lexicographic() {
    let mut seen = Vec::new();
    for_each_subset(&[4, 7, 9], 2, |s| {
        seen.push(s.to_vec());
        Ok(false)
    })
    .unwrap();
    assert_eq!(seen, vec![vec![4, 7], vec![4, 9], vec![7, 9]]);
    let mut count = 0;
    for_each_subset(&[1, 2], 0, |s| {
        assert!(s.is_empty());
        count += 1;
        Ok(false)
    })
    .unwrap();
    assert_eq!(count, 1);
    assert!(!for_each_subset(&[1], 2, |_| Ok(true)).unwrap());
}

#[test]
fn skeleton_figure4() {
    let m = fixtures::figure4();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let (g, sep) = cim_skeleton(&o, &w, &CimConfig::default()).unwrap();
    let want: BTreeSet<(String, String)> =
        [("X1", "X2"), ("X2", "X4"), ("X1", "X4"), ("X2", "X3")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(g.skeleton(), want);
    assert_eq!(g.count_marks(Mark::Circle), 8);
    assert_eq!(sep.len(), 2);
}

#[test]
fn skeleton_figure8() {
    let m = fixtures::figure8();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let (g, sep) = cim_skeleton(&o, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.edge_count(), 2);
    let (o1, o3) = (w.index_of("O1").unwrap(), w.index_of("O3").unwrap());
    assert!(!g.adjacent(o1, o3));
    assert_eq!(sep[&pair(o1, o3)], VertexSet::new());
}

#[test]
fn independent_variables_give_empty_graph() {
    let w = waves(&["A", "B", "C"], &[1, 2, 2]);
    struct AllIndependent;
    impl CiTest for AllIndependent {
        fn num_vars(&self) -> usize {
            3
        }
        fn test(&self, _: usize, _: usize, _: &[usize]) -> Result<CiDecision> {
            Ok(CiDecision::oracle(true))
        }
    }
    let (g, sep) = cim_skeleton(&AllIndependent, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert!(sep.values().all(|s| s.is_empty()));
    let out = run_cim(&AllIndependent, &w, &PriorKnowledge::none(), &CimConfig::default()).unwrap();
    assert_eq!(out.graph.edge_count(), 0);
}

#[test]
fn skeleton_checks_variable_count() {
    let w = waves(&["A", "B"], &[1, 2]);
    let l = Listed { n: 3, indep: vec![] };
    assert!(cim_skeleton(&l, &w, &CimConfig::default()).is_err());
}

#[test]
fn orient_waves_rules() {
    let m = fixtures::figure4();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let (mut g, _) = cim_skeleton(&o, &w, &CimConfig::default()).unwrap();
    orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap();
    assert_eq!(mark(&g, "X2", "X3"), Some(Mark::Arrow));
    assert_eq!(mark(&g, "X3", "X2"), Some(Mark::Circle));
    assert_eq!(g.count_marks(Mark::Arrow), 1);

    // a single wave leaves the graph unchanged
    let w1 = waves(&["X1", "X2"], &[1, 1]);
    let mut g1 = MixedGraph::complete(w1.vertices());
    let before = g1.clone();
    orient_waves(&mut g1, &w1, &PriorKnowledge::none()).unwrap();
    assert_eq!(g1, before);

    // "X1 cannot be an ancestor of X2" puts an arrowhead at X1
    let mut pk = PriorKnowledge::none();
    pk.forbid(0, 1);
    orient_waves(&mut g1, &w1, &pk).unwrap();
    assert_eq!(g1.mark_at(1, 0), Some(Mark::Arrow));
    assert_eq!(g1.mark_at(0, 1), Some(Mark::Circle));
}

#[test]
fn orient_waves_reports_tail_conflict() {
    let w = waves(&["A", "B"], &[1, 2]);
    let mut g = MixedGraph::complete(w.vertices());
    g.set_mark(0, 1, Mark::Tail).unwrap();
    let err = orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap_err();
    assert!(err.is_inconsistency());
}

/// A in wave 1; M, Z, C in wave 2. A and C are separated by {M} and by {Z}.
fn two_separator_instance() -> (Listed, WaveAssignment) {
    let w = waves(&["A", "C", "M", "Z"], &[1, 2, 2, 2]);
    let l = Listed { n: 4, indep: vec![(0, 1, [2].into()), (0, 1, [3].into())] };
    (l, w)
}

#[test]
fn sep2_finds_second_minimal_set() {
    let (l, w) = two_separator_instance();
    let cfg = CimConfig::default();
    let (mut g, sep) = cim_skeleton(&l, &w, &cfg).unwrap();
    assert_eq!(sep[&(0, 1)], [2].into());
    orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap();
    let sep2 = find_sep2(&g, &l, &w, &sep, &cfg).unwrap();
    assert_eq!(sep2.get(&(0, 3, 1)), Some(&[3].into()));
    // M is already in Sep(A, C), so no search for it
    assert!(!sep2.contains_key(&(0, 2, 1)));

    let out = run_cim(&l, &w, &PriorKnowledge::none(), &cfg).unwrap();
    assert_eq!(mark(&out.graph, "C", "Z"), Some(Mark::Tail));
    assert_eq!(mark(&out.graph, "C", "M"), Some(Mark::Tail));
    assert_eq!(mark(&out.graph, "A", "Z"), Some(Mark::Arrow));
    assert_eq!(mark(&out.graph, "Z", "C"), Some(Mark::Circle));
}

#[test]
fn sep2_requires_minimality() {
    // {Z} alone does not separate; {M, Z} does, but so does {M}
    let w = waves(&["A", "C", "M", "Z"], &[1, 2, 2, 2]);
    let l = Listed { n: 4, indep: vec![(0, 1, [2].into()), (0, 1, [2, 3].into())] };
    let cfg = CimConfig::default();
    let (mut g, sep) = cim_skeleton(&l, &w, &cfg).unwrap();
    orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap();
    let sep2 = find_sep2(&g, &l, &w, &sep, &cfg).unwrap();
    assert!(sep2.is_empty());
}

#[test]
fn sep2_skips_shielded_triples() {
    let w = waves(&["A", "B", "C"], &[1, 2, 2]);
    let l = Listed { n: 3, indep: vec![] };
    let cfg = CimConfig::default();
    let (mut g, sep) = cim_skeleton(&l, &w, &cfg).unwrap();
    orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap();
    assert!(find_sep2(&g, &l, &w, &sep, &cfg).unwrap().is_empty());
}

#[test]
fn figure8_sep2_is_empty() {
    // conditioning on O2 opens the collider O1^1 -> O2^1 <- O3^1
    let m = fixtures::figure8();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let (o1, o2, o3) = (w.index_of("O1").unwrap(), w.index_of("O2").unwrap(), w.index_of("O3").unwrap());
    assert!(!o.test(o1, o3, &[o2]).unwrap().independent);
    let cfg = CimConfig::default();
    let (mut g, sep) = cim_skeleton(&o, &w, &cfg).unwrap();
    orient_waves(&mut g, &w, &PriorKnowledge::none()).unwrap();
    assert!(find_sep2(&g, &o, &w, &sep, &cfg).unwrap().is_empty());
}

#[test]
fn orient_tails_from_hand_made_maps() {
    let w = waves(&["A", "B", "C"], &[1, 2, 2]);
    let mut g = MixedGraph::new(w.vertices());
    g.set_edge(0, 1, Mark::Circle, Mark::Arrow).unwrap();
    g.set_edge(1, 2, Mark::Circle, Mark::Circle).unwrap();
    let mut conflicts = Vec::new();

    // no qualifying entry: unchanged
    let mut h = g.clone();
    let mut sep = SepMap::new();
    sep.insert((0, 2), VertexSet::new());
    orient_tails(&mut h, &sep, &Sep2Map::new(), &mut conflicts).unwrap();
    assert_eq!(h, g);

    // a Sep2 entry puts a tail at B on B - C
    let mut sep2 = Sep2Map::new();
    sep2.insert((0, 1, 2), [1].into());
    orient_tails(&mut h, &sep, &sep2, &mut conflicts).unwrap();
    assert_eq!(h.mark_at(2, 1), Some(Mark::Tail));
    assert_eq!(h.mark_at(1, 2), Some(Mark::Circle));

    // B in Sep(A, C) does the same
    let mut h = g.clone();
    sep.insert((0, 2), [1].into());
    orient_tails(&mut h, &sep, &Sep2Map::new(), &mut conflicts).unwrap();
    assert_eq!(h.mark_at(2, 1), Some(Mark::Tail));

    // an existing arrowhead is kept and logged
    let mut h = g.clone();
    h.set_mark(2, 1, Mark::Arrow).unwrap();
    orient_tails(&mut h, &sep, &Sep2Map::new(), &mut conflicts).unwrap();
    assert_eq!(h.mark_at(2, 1), Some(Mark::Arrow));
    // both A *-> B and C *-> B request a tail at B
    assert_eq!(conflicts.len(), 2);
}

#[test]
fn transitive_tail_chain() {
    let w = waves(&["A", "B", "C"], &[1, 1, 1]);
    let mut g = MixedGraph::new(w.vertices());
    g.set_edge(0, 1, Mark::Tail, Mark::Circle).unwrap();
    g.set_edge(1, 2, Mark::Tail, Mark::Arrow).unwrap();
    g.set_edge(0, 2, Mark::Circle, Mark::Circle).unwrap();
    transitive_tails(&mut g).unwrap();
    assert_eq!(g.mark_at(2, 0), Some(Mark::Tail));
    assert_eq!(g.mark_at(0, 2), Some(Mark::Circle));

    let mut h = MixedGraph::new(w.vertices());
    h.set_edge(0, 1, Mark::Circle, Mark::Circle).unwrap();
    let before = h.clone();
    transitive_tails(&mut h).unwrap();
    assert_eq!(h, before);
}

#[test]
fn transitive_tails_reach_fixpoint_on_longer_chains() {
    let w = waves(&["A", "B", "C", "D"], &[1, 1, 1, 1]);
    let mut g = MixedGraph::new(w.vertices());
    g.set_edge(1, 2, Mark::Tail, Mark::Circle).unwrap();
    g.set_edge(2, 3, Mark::Tail, Mark::Circle).unwrap();
    g.set_edge(1, 3, Mark::Circle, Mark::Circle).unwrap();
    g.set_edge(0, 1, Mark::Tail, Mark::Circle).unwrap();
    g.set_edge(0, 3, Mark::Circle, Mark::Circle).unwrap();
    transitive_tails(&mut g).unwrap();
    assert_eq!(g.mark_at(3, 1), Some(Mark::Tail));
    assert_eq!(g.mark_at(3, 0), Some(Mark::Tail));
}

#[test]
fn figure4_oracle_run() {
    let m = fixtures::figure4();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let out = run_cim(&o, &w, &PriorKnowledge::none(), &CimConfig::default()).unwrap();
    let g = &out.graph;
    assert_eq!(mark(g, "X2", "X3"), Some(Mark::Arrow));
    assert_eq!(mark(g, "X3", "X2"), Some(Mark::Circle));
    for (a, b) in [("X1", "X2"), ("X2", "X4"), ("X4", "X1")] {
        assert_eq!(mark(g, a, b), Some(Mark::Circle));
        assert_eq!(mark(g, b, a), Some(Mark::Circle));
    }
    let t = ground_truth_endpoints(&m, &w).unwrap();
    assert!(t.contradictions(g).unwrap().is_empty());
    assert_eq!(g.skeleton(), t.graph().skeleton());
}

#[test]
fn figure8_oracle_run_avoids_collider() {
    let m = fixtures::figure8();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let out = run_cim(&o, &w, &PriorKnowledge::none(), &CimConfig::default()).unwrap();
    let g = &out.graph;
    assert_eq!(mark(g, "O1", "O2"), Some(Mark::Arrow));
    assert_ne!(mark(g, "O3", "O2"), Some(Mark::Arrow));
    let t = ground_truth_endpoints(&m, &w).unwrap();
    assert!(t.contradictions(g).unwrap().is_empty());
}

#[test]
fn run_cim_needs_two_waves() {
    let w = waves(&["A", "B"], &[1, 1]);
    let l = Listed { n: 2, indep: vec![] };
    assert!(run_cim(&l, &w, &PriorKnowledge::none(), &CimConfig::default()).is_err());
}

#[test]
fn pc_commits_figure8_collider() {
    let m = fixtures::figure8();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let g = pc_stable_baseline(&o, &w, &CimConfig::default()).unwrap();
    assert_eq!(mark(&g, "O1", "O2"), Some(Mark::Arrow));
    assert_eq!(mark(&g, "O3", "O2"), Some(Mark::Arrow));
    assert_eq!(mark(&g, "O2", "O1"), Some(Mark::Tail));
    assert_eq!(mark(&g, "O2", "O3"), Some(Mark::Tail));
}

#[test]
fn pc_orients_chain() {
    let vs: Vec<Vertex> = [("X", 1), ("Y", 2), ("Z", 3)].iter().map(|(l, w)| Vertex::observed(*l, Some(*w))).collect();
    let m = MixtureGraph::from_edges(&vs, &[vec![("X", "Y"), ("Y", "Z")]], &[]).unwrap();
    let w = waves_of(&m);
    let o = OracleCi::new(&m, w.labels()).unwrap();
    let g = pc_stable_baseline(&o, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.edge_count(), 2);
    assert_eq!(mark(&g, "X", "Y"), Some(Mark::Arrow));
    assert_eq!(mark(&g, "Y", "X"), Some(Mark::Tail));
    assert_eq!(mark(&g, "Y", "Z"), Some(Mark::Arrow));
    assert_eq!(mark(&g, "Z", "Y"), Some(Mark::Tail));
}

#[test]
fn pc_meek_rule_one_within_a_wave() {
    // A -> B - C with A, C non-adjacent and B, C in the same wave
    let w = waves(&["A", "B", "C"], &[1, 2, 2]);
    let l = Listed { n: 3, indep: vec![(0, 2, [1].into())] };
    let g = pc_stable_baseline(&l, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.mark_at(1, 2), Some(Mark::Arrow));
    assert_eq!(g.mark_at(2, 1), Some(Mark::Tail));
}

#[test]
fn pc_later_collider_overwrites_earlier_one() {
    // A - B - C - D in one wave: colliders at B and at C both claim B - C
    let w = waves(&["A", "B", "C", "D"], &[1, 1, 1, 1]);
    let l = Listed { n: 4, indep: vec![(0, 2, VertexSet::new()), (1, 3, VertexSet::new()), (0, 3, VertexSet::new())] };
    let g = pc_stable_baseline(&l, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.edge_count(), 3);
    assert_eq!(g.mark_at(0, 1), Some(Mark::Arrow));
    assert_eq!(g.mark_at(1, 2), Some(Mark::Arrow));
    assert_eq!(g.mark_at(2, 1), Some(Mark::Tail));
    assert_eq!(g.mark_at(3, 2), Some(Mark::Arrow));
    assert!(g.edges().iter().all(|e| !(e.2 == Mark::Arrow && e.3 == Mark::Arrow)));
}

#[test]
fn pc_skips_collider_into_earlier_wave() {
    let w = waves(&["A", "B", "C"], &[2, 1, 2]);
    let l = Listed { n: 3, indep: vec![(0, 2, VertexSet::new())] };
    let g = pc_stable_baseline(&l, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.mark_at(1, 0), Some(Mark::Arrow));
    assert_eq!(g.mark_at(0, 1), Some(Mark::Tail));
    assert_eq!(g.mark_at(1, 2), Some(Mark::Arrow));
    assert_eq!(g.mark_at(2, 1), Some(Mark::Tail));
}

#[test]
fn pc_keeps_complete_skeleton_without_independences() {
    let w = waves(&["A", "B", "C", "D"], &[1, 1, 2, 2]);
    let l = Listed { n: 4, indep: vec![] };
    let g = pc_stable_baseline(&l, &w, &CimConfig::default()).unwrap();
    assert_eq!(g.edge_count(), 6);
    assert_eq!(g.count_marks(Mark::Circle), 0);
}

#[test]
fn max_cond_bounds_the_search() {
    let (l, w) = two_separator_instance();
    let cfg = CimConfig { max_cond: Some(0) };
    let (g, sep) = cim_skeleton(&l, &w, &cfg).unwrap();
    assert_eq!(g.edge_count(), 6);
    assert!(sep.is_empty());
}

#[test]
fn reordered_waves_follow_labels() {
    let w = waves(&["A", "B", "C"], &[1, 2, 3]);
    let r = w.reordered(&["C", "A", "B"]).unwrap();
    assert_eq!(r.waves(), &[3, 1, 2]);
    assert!(w.reordered(&["Q"]).is_err());
    assert!(WaveAssignment::new(vec!["A".into()], vec![0]).is_err());
    assert!(WaveAssignment::new(vec!["A".into(), "A".into()], vec![1, 1]).is_err());
}
