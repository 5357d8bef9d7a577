use mixdag::ci::OracleCi;
use mixdag::cim::{cim_skeleton, find_sep2, orient_waves, run_cim, CimConfig, PriorKnowledge};
use mixdag::graph::{Digraph, Mark, VertexSet};
use mixdag::mixture::random::{random_mixture, RandomMixtureConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_cim_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rm = random_mixture(&RandomMixtureConfig::default(), &mut rng).unwrap();
        let (m, w) = (&rm.graph, &rm.waves);
        let o = OracleCi::new(m, w.labels()).unwrap();
        let cfg = CimConfig::default();
        let out = run_cim(&o, w, &PriorKnowledge::none(), &cfg).unwrap();
        let g = &out.graph;

        // arrowheads point forward in time between waves
        for (u, v, mu, mv) in g.edges() {
            if w.wave(u) < w.wave(v) {
                prop_assert_eq!(mv, Mark::Arrow);
            } else if w.wave(v) < w.wave(u) {
                prop_assert_eq!(mu, Mark::Arrow);
            }
        }

        // steps after the skeleton only replace circles
        let (skel, _) = cim_skeleton(&o, w, &cfg).unwrap();
        prop_assert_eq!(skel.skeleton(), g.skeleton());
        let mut waved = skel.clone();
        orient_waves(&mut waved, w, &PriorKnowledge::none()).unwrap();
        let sep2 = find_sep2(&waved, &o, w, &out.sep, &cfg).unwrap();
        prop_assert_eq!(&sep2, &out.sep2);
        for (u, v, mu, mv) in waved.edges() {
            if mu != Mark::Circle {
                prop_assert_eq!(g.mark_at(v, u), Some(mu));
            }
            if mv != Mark::Circle {
                prop_assert_eq!(g.mark_at(u, v), Some(mv));
            }
        }

        // every separating-set member is an ancestor of the pair or S
        let f = m.fused();
        let sel = m.selection();
        let base = |p: usize| o.vars()[p];
        let anc_of = |a: usize, b: usize| -> VertexSet {
            let mut s = sel.clone();
            s.insert(base(a));
            s.insert(base(b));
            f.ancestors(&s).unwrap()
        };
        for (&(a, b), s) in &out.sep {
            let anc = anc_of(a, b);
            prop_assert!(s.iter().all(|&x| anc.contains(&base(x))));
        }
        for (&(i, _, k), s) in &out.sep2 {
            let anc = anc_of(i, k);
            prop_assert!(s.iter().all(|&x| anc.contains(&base(x))));
        }
    }
}
