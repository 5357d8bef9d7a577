use mixdag::checks;
use mixdag::ci::{CiTest, FisherZ, OracleCi};
use mixdag::graph::{Dag, Digraph, Vertex};
use mixdag::mixture::random::{random_mixture, RandomMixtureConfig};
use mixdag::mixture::{build_fused_graph, build_mixture_graph, fused_implies_mixture_check};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn forward_dag(n: usize, bits: &[bool]) -> Dag {
    let vs = (0..n).map(|v| Vertex::observed(format!("V{v}"), None)).collect();
    let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
    Dag::from_edges(vs, pairs.zip(bits).filter(|(_, &b)| b).map(|(e, _)| e)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fused_graph_of_identical_components_is_the_component(n in 2usize..=6, bits in proptest::collection::vec(any::<bool>(), 15), q in 1usize..=3) {
        let d = forward_dag(n, &bits);
        let m = build_mixture_graph(&vec![d.clone(); q], &[]).unwrap();
        let f = build_fused_graph(&m);
        let labelled = |edges: std::collections::BTreeSet<(usize, usize)>, lab: &dyn Fn(usize) -> String| -> Vec<(String, String)> {
            edges.into_iter().map(|(a, b)| (lab(a), lab(b))).collect()
        };
        let fl = labelled(f.edges(), &|v| f.vertices()[v].label.clone());
        let dl = labelled(d.edges(), &|v| d.label(v).to_string());
        prop_assert_eq!(fl, dl);
    }

    #[test]
    fn fused_separation_carries_over(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rm = random_mixture(&RandomMixtureConfig::default(), &mut rng).unwrap();
        prop_assert!(fused_implies_mixture_check(&rm.graph, 50, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn markov_property_holds(seed in any::<u64>()) {
        let o = checks::markov_suite(1, seed, 1e-9).unwrap();
        prop_assert!(o.passed(), "{:?}", o.examples);
    }

    #[test]
    fn oracle_is_symmetric_and_repeatable(seed in any::<u64>(), x in 0usize..10, y in 0usize..10, mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rm = random_mixture(&RandomMixtureConfig::default(), &mut rng).unwrap();
        let o = OracleCi::new(&rm.graph, rm.waves.labels()).unwrap();
        let n = o.num_vars();
        let (x, y) = (x % n, y % n);
        if x != y {
            let given: Vec<usize> = (0..n).filter(|&v| v != x && v != y && mask >> v & 1 == 1).collect();
            let d = o.test(x, y, &given).unwrap();
            prop_assert_eq!(d, o.test(y, x, &given).unwrap());
            prop_assert_eq!(d, o.test(x, y, &given).unwrap());
        }
    }

    #[test]
    fn fisher_z_ignores_affine_rescaling(seed in any::<u64>(), col in 0usize..4, scale in 0.01f64..100.0, neg in any::<bool>(), shift in -1e3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 300;
        let mut data = DMatrix::<f64>::zeros(n, 4);
        for r in 0..n {
            let e: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            data[(r, 0)] = e[0];
            data[(r, 1)] = 0.5 * data[(r, 0)] + e[1];
            data[(r, 2)] = 0.4 * data[(r, 1)] + e[2];
            data[(r, 3)] = 0.3 * data[(r, 0)] - 0.3 * data[(r, 2)] + e[3];
        }
        let mut scaled = data.clone();
        let a = if neg { -scale } else { scale };
        for r in 0..n {
            scaled[(r, col)] = a * scaled[(r, col)] + shift;
        }
        let f1 = FisherZ::new(&data, 0.01).unwrap();
        let f2 = FisherZ::new(&scaled, 0.01).unwrap();
        for (x, y, g) in [(0, 2, vec![]), (0, 2, vec![1]), (1, 3, vec![0, 2]), (0, 3, vec![1]), (2, 3, vec![])] {
            let (d1, d2) = (f1.test(x, y, &g).unwrap(), f2.test(x, y, &g).unwrap());
            prop_assert!((d1.p_value - d2.p_value).abs() <= 1e-9, "{x} {y} {g:?}: {} vs {}", d1.p_value, d2.p_value);
            prop_assert_eq!(d1.independent, d2.independent);
        }
    }
}
