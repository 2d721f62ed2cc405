mod common;

use common::graph_strategy;
use mpnngb::distance::{pairwise_matrix, ud, ud_oracle, DistanceParams, ORACLE_GUARD};
use mpnngb::graph::{FeaturedGraph, RepresentationTarget, TransformKind};
use mpnngb::refinement::refine;
use mpnngb::unrolling::unroll;
use mpnngb::Error;
use proptest::prelude::*;

fn node(g: &FeaturedGraph<f64>, u: usize) -> RepresentationTarget<'_, f64> {
    RepresentationTarget::node(g, u % g.node_count()).unwrap()
}

fn link(g: &FeaturedGraph<f64>, a: usize, b: usize) -> Option<RepresentationTarget<'_, f64>> {
    let n = g.node_count();
    let (u, v) = (a % n, b % n);
    (u != v).then(|| RepresentationTarget::link(g, u, v).unwrap())
}

fn transform_strategy() -> impl Strategy<Value = TransformKind> {
    prop_oneof![Just(TransformKind::Identity), Just(TransformKind::SealLite { radius: 1 }), Just(TransformKind::PairwiseConditional)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn solver_matches_oracle_on_nodes(
        g1 in graph_strategy(5, 2, "a"), g2 in graph_strategy(5, 2, "b"),
        u in 0usize..5, v in 0usize..5, depth in 0usize..=2, binomial in any::<bool>(),
    ) {
        let p = if binomial { DistanceParams::binomial(depth, TransformKind::Identity) } else { DistanceParams::flat(depth, TransformKind::Identity) };
        let (x, y) = (node(&g1, u), node(&g2, v));
        let fast = ud(&x, &y, &p).unwrap();
        match ud_oracle(&x, &y, &p, ORACLE_GUARD) {
            Ok(slow) => prop_assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}"),
            Err(Error::GuardExceeded { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn solver_matches_oracle_on_links(
        g1 in graph_strategy(4, 1, "a"), g2 in graph_strategy(4, 1, "b"),
        a in 0usize..4, b in 0usize..4, c in 0usize..4, e in 0usize..4,
        depth in 0usize..=2, transform in transform_strategy(),
    ) {
        let (Some(x), Some(y)) = (link(&g1, a, b), link(&g2, c, e)) else { return Ok(()) };
        let p = DistanceParams::binomial(depth, transform);
        let fast = ud(&x, &y, &p).unwrap();
        match ud_oracle(&x, &y, &p, ORACLE_GUARD) {
            Ok(slow) => prop_assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}"),
            Err(Error::GuardExceeded { .. }) | Err(Error::EmptyForests) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn pseudo_metric_axioms(
        g1 in graph_strategy(7, 2, "a"), g2 in graph_strategy(7, 2, "b"), g3 in graph_strategy(7, 2, "c"),
        u in 0usize..7, v in 0usize..7, w in 0usize..7, depth in 0usize..=3,
    ) {
        let p = DistanceParams::binomial(depth, TransformKind::Identity);
        let (x, y, z) = (node(&g1, u), node(&g2, v), node(&g3, w));
        let xy = ud(&x, &y, &p).unwrap();
        prop_assert_eq!(ud(&x, &x, &p).unwrap(), 0.0);
        prop_assert_eq!(xy, ud(&y, &x, &p).unwrap());
        let xz = ud(&x, &z, &p).unwrap();
        let yz = ud(&y, &z, &p).unwrap();
        prop_assert!(xz <= xy + yz + 1e-9);
        prop_assert!(xy <= xz + yz + 1e-9);
        prop_assert!(yz <= xy + xz + 1e-9);
    }

    #[test]
    fn seal_pseudo_metric_axioms(
        g1 in graph_strategy(6, 1, "a"), g2 in graph_strategy(6, 1, "b"), g3 in graph_strategy(6, 1, "c"),
        s in proptest::collection::vec(0usize..6, 6), depth in 0usize..=2,
    ) {
        let (Some(x), Some(y), Some(z)) = (link(&g1, s[0], s[1]), link(&g2, s[2], s[3]), link(&g3, s[4], s[5])) else { return Ok(()) };
        let p = DistanceParams::binomial(depth, TransformKind::SealLite { radius: 1 });
        let xy = ud(&x, &y, &p).unwrap();
        prop_assert_eq!(xy, ud(&y, &x, &p).unwrap());
        let xz = ud(&x, &z, &p).unwrap();
        let yz = ud(&y, &z, &p).unwrap();
        prop_assert!(xz <= xy + yz + 1e-9);
    }

    #[test]
    fn weights_scale_linearly(g1 in graph_strategy(6, 2, "a"), g2 in graph_strategy(6, 2, "b"), u in 0usize..6, v in 0usize..6, depth in 0usize..=3, c in 0.0f64..10.0) {
        let p = DistanceParams::binomial(depth, TransformKind::Identity);
        let (x, y) = (node(&g1, u), node(&g2, v));
        let base = ud(&x, &y, &p).unwrap();
        // Powers of two scale floating-point sums exactly.
        for k in [0.0, 0.5, 2.0, 4.0] {
            prop_assert_eq!(ud(&x, &y, &p.scaled(k)).unwrap(), k * base);
        }
        prop_assert!((ud(&x, &y, &p.scaled(c)).unwrap() - c * base).abs() <= 1e-9 * (1.0 + c * base));
    }

    #[test]
    fn zero_distance_iff_isomorphic_unrollings(g in graph_strategy(8, 1, "g"), u in 0usize..8, v in 0usize..8, depth in 0usize..=3) {
        let p = DistanceParams::flat(depth, TransformKind::Identity);
        let (x, y) = (node(&g, u), node(&g, v));
        let d = ud(&x, &y, &p).unwrap();
        let tx = unroll(&g, x.subset[0], depth).unwrap();
        let ty = unroll(&g, y.subset[0], depth).unwrap();
        prop_assert_eq!(d == 0.0, tx.is_isomorphic(&ty), "d = {}", d);
        let colors = refine(&g, depth);
        prop_assert_eq!(colors[x.subset[0]] == colors[y.subset[0]], d == 0.0);
    }

    #[test]
    fn invariant_under_relabelling(g in graph_strategy(7, 2, "g"), u in 0usize..7, depth in 0usize..=3, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut mpnngb::rng::rng_from_seed(seed));
        let h = g.relabeled(&perm).with_id("h");
        let p = DistanceParams::binomial(depth, TransformKind::Identity);
        let u = u % n;
        prop_assert_eq!(ud(&node(&g, u), &node(&h, perm[u]), &p).unwrap(), 0.0);
    }
}

#[test]
fn pairwise_matrix_matches_direct_calls() {
    let mut rng = mpnngb::rng::rng_from_seed(17);
    let graphs: Vec<_> = (0..3).map(|i| common::random_graph(&mut rng, &format!("g{i}"), 5, 0.5, 2)).collect();
    let targets: Vec<_> = graphs.iter().map(|g| RepresentationTarget::node(g, 0).unwrap()).collect();
    let p = DistanceParams::binomial(2, TransformKind::Identity);
    let seq = pairwise_matrix(&targets, &p, false).unwrap();
    let par = pairwise_matrix(&targets, &p, true).unwrap();
    assert_eq!(seq, par);
    for i in 0..3 {
        for j in 0..3 {
            let direct = if i == j { 0.0 } else { ud(&targets[i], &targets[j], &p).unwrap() };
            assert_eq!(seq.get(i, j), direct);
        }
    }
    let one = pairwise_matrix(&targets[..1], &p, true).unwrap();
    assert_eq!(one.rows(), &[vec![0.0]]);
    let dup = vec![targets[0].clone(), targets[0].clone()];
    assert_eq!(pairwise_matrix(&dup, &p, true).unwrap().rows(), &[vec![0.0, 0.0], vec![0.0, 0.0]]);
}

#[test]
fn f32_agrees_with_f64() {
    let mut rng = mpnngb::rng::rng_from_seed(5);
    let a = common::random_graph(&mut rng, "a", 6, 0.5, 3);
    let b = common::random_graph(&mut rng, "b", 6, 0.5, 3);
    let (a32, b32) = (a.cast::<f32>(), b.cast::<f32>());
    let d64 = ud(&node(&a, 0), &node(&b, 1), &DistanceParams::binomial(2, TransformKind::Identity)).unwrap();
    let d32 = ud(
        &RepresentationTarget::node(&a32, 0).unwrap(),
        &RepresentationTarget::node(&b32, 1).unwrap(),
        &DistanceParams::<f32>::binomial(2, TransformKind::Identity),
    )
    .unwrap();
    assert!((f64::from(d32) - d64).abs() < 1e-4 * (1.0 + d64));
}
