mod common;

use common::graph_strategy;
use mpnngb::distance::{ud, DistanceParams};
use mpnngb::gmpnn::{embed, embed_many, lipschitz_certify, node_embeddings, Activation, GmpnnConfig, MpnnLayer, Pooling};
use mpnngb::graph::{FeaturedGraph, RepresentationTarget, TransformKind};
use mpnngb::linalg::dist2;
use proptest::prelude::*;

fn config(d: usize, depth: usize, transform: TransformKind, pooling: Pooling, seed: u64) -> GmpnnConfig<f64> {
    GmpnnConfig::random(d, 4, depth, Activation::Relu, transform, pooling, 1.0, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn node_embeddings_are_equivariant(g in graph_strategy(7, 2, "g"), depth in 0usize..=3, seed in any::<u64>(), u in 0usize..7) {
        use rand::seq::SliceRandom;
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut mpnngb::rng::rng_from_seed(seed));
        let h = g.relabeled(&perm);
        let cfg = config(2, depth, TransformKind::Identity, Pooling::Sum, seed);
        let u = u % n;
        let a = embed(&RepresentationTarget::node(&g, u).unwrap(), &cfg).unwrap();
        let b = embed(&RepresentationTarget::node(&h, perm[u]).unwrap(), &cfg).unwrap();
        prop_assert!(dist2(&a.vector, &b.vector) <= 1e-12);
    }

    #[test]
    fn sum_pooled_node_target_is_the_node_embedding(g in graph_strategy(6, 2, "g"), depth in 0usize..=3, seed in any::<u64>(), u in 0usize..6) {
        let cfg = config(2, depth, TransformKind::Identity, Pooling::Sum, seed);
        let u = u % g.node_count();
        let e = embed(&RepresentationTarget::node(&g, u).unwrap(), &cfg).unwrap();
        prop_assert_eq!(&e.vector, &node_embeddings(&g, &cfg.layers).unwrap()[u]);
    }

    #[test]
    fn zero_distance_means_equal_embeddings(g in graph_strategy(8, 1, "g"), depth in 1usize..=3, seed in any::<u64>(), u in 0usize..8, v in 0usize..8) {
        let cfg = config(1, depth, TransformKind::Identity, Pooling::Sum, seed);
        let n = g.node_count();
        let (x, y) = (RepresentationTarget::node(&g, u % n).unwrap(), RepresentationTarget::node(&g, v % n).unwrap());
        let d = ud(&x, &y, &DistanceParams::binomial(depth, TransformKind::Identity)).unwrap();
        let e = dist2(&embed(&x, &cfg).unwrap().vector, &embed(&y, &cfg).unwrap().vector);
        if d == 0.0 {
            prop_assert!(e <= 1e-9);
        }
    }

    #[test]
    fn embeddings_are_lipschitz_in_ud(
        g1 in graph_strategy(6, 2, "a"), g2 in graph_strategy(6, 2, "b"), depth in 1usize..=3, seed in any::<u64>(),
        u in 0usize..6, v in 0usize..6, b in 0.5f64..3.0,
    ) {
        let cfg = GmpnnConfig::random(2, 3, depth, Activation::Relu, TransformKind::Identity, Pooling::Sum, b, seed).unwrap();
        let x = RepresentationTarget::node(&g1, u % g1.node_count()).unwrap();
        let y = RepresentationTarget::node(&g2, v % g2.node_count()).unwrap();
        let d = ud(&x, &y, &DistanceParams::binomial(depth, TransformKind::Identity)).unwrap();
        let e = dist2(&embed(&x, &cfg).unwrap().vector, &embed(&y, &cfg).unwrap().vector);
        prop_assert!(e <= cfg.layer_factor() * d * (1.0 + 1e-9) + 1e-12, "{} > {} * {}", e, cfg.layer_factor(), d);
    }

    #[test]
    fn spectral_norms_respect_the_bound(d_in in 1usize..8, d_out in 1usize..8, seed in any::<u64>(), b in 0.1f64..4.0) {
        let mut rng = mpnngb::rng::rng_from_seed(seed);
        let l = MpnnLayer::<f64>::random(d_in, d_out, Activation::Relu, b, 1.0, &mut rng);
        prop_assert!(l.respects_bound(1e-6));
    }
}

/// Straight-line recomputation of one SEAL layer with sum pooling on the
/// triangle's link (0, 1).
#[test]
fn seal_layer_matches_dense_reference() {
    let g = FeaturedGraph::new("t", 3, &[(0, 1), (1, 2), (0, 2)], vec![vec![0.5], vec![-1.0], vec![2.0]]).unwrap();
    let cfg = config(1, 1, TransformKind::SealLite { radius: 1 }, Pooling::Sum, 42);
    let got = embed(&RepresentationTarget::link(&g, 0, 1).unwrap(), &cfg).unwrap().vector;

    // Target link removed: 0-2 and 1-2 remain. Labels are distances to 0 and 1.
    let x = [[0.5, 0.0, 2.0], [-1.0, 2.0, 0.0], [2.0, 1.0, 1.0]];
    let nbrs: [&[usize]; 3] = [&[2], &[2], &[0, 1]];
    let (w1, w2) = (&cfg.layers[0].w1, &cfg.layers[0].w2);
    let mut expected = vec![0.0; 4];
    for v in 0..3 {
        let mut agg = [0.0; 3];
        for &u in nbrs[v] {
            for k in 0..3 {
                agg[k] += x[u][k];
            }
        }
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..3 {
                s += w1[(k, j)] * x[v][k] + w2[(k, j)] * agg[k];
            }
            expected[j] += s.max(0.0);
        }
    }
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12, "{got:?} vs {expected:?}");
    }
}

#[test]
fn zero_weights_give_zero_ratio() {
    let mut rng = mpnngb::rng::rng_from_seed(1);
    let graphs: Vec<_> = (0..4).map(|i| common::random_graph(&mut rng, &format!("g{i}"), 6, 0.4, 2)).collect();
    let targets: Vec<_> = graphs.iter().flat_map(|g| (0..3).map(move |v| RepresentationTarget::node(g, v).unwrap())).collect();
    let layers = vec![MpnnLayer::zeros(2, 3, Activation::Relu), MpnnLayer::zeros(3, 3, Activation::Relu)];
    let cfg = GmpnnConfig::new(layers, TransformKind::Identity, Pooling::Sum, 0).unwrap();
    let r = lipschitz_certify(&targets, &cfg, &DistanceParams::binomial(2, TransformKind::Identity), 50, 3).unwrap();
    assert_eq!(r.max_ratio, 0.0);
    assert!(r.pass);
}

#[test]
fn certification_passes_for_random_models() {
    let mut rng = mpnngb::rng::rng_from_seed(9);
    let graphs: Vec<_> = (0..6).map(|i| common::random_graph(&mut rng, &format!("g{i}"), 8, 0.3, 3)).collect();
    let nodes: Vec<_> = graphs.iter().flat_map(|g| (0..g.node_count()).map(move |v| RepresentationTarget::node(g, v).unwrap())).collect();
    let links: Vec<_> = graphs.iter().flat_map(|g| g.edges().map(move |(u, v)| RepresentationTarget::link(g, u, v).unwrap())).collect();
    for (seed, depth) in [(1, 2), (2, 3)] {
        let cfg = config(3, depth, TransformKind::Identity, Pooling::Sum, seed);
        let r = lipschitz_certify(&nodes, &cfg, &DistanceParams::binomial(depth, TransformKind::Identity), 100, seed).unwrap();
        assert!(r.pass && r.max_ratio > 0.0, "{} vs {}", r.max_ratio, r.theoretical_c);
        for pooling in [Pooling::Hadamard, Pooling::Sum] {
            let cfg = config(3, depth, TransformKind::Identity, pooling, seed);
            let r = lipschitz_certify(&links, &cfg, &DistanceParams::binomial(depth, TransformKind::Identity), 100, seed).unwrap();
            assert!(r.pass, "{pooling}: {} vs {}", r.max_ratio, r.theoretical_c);
        }
        let seal = TransformKind::SealLite { radius: 1 };
        let cfg = config(3, depth, seal, Pooling::Sum, seed);
        let r = lipschitz_certify(&links[..20], &cfg, &DistanceParams::binomial(depth, seal), 60, seed).unwrap();
        assert!(r.pass, "seal: {} vs {}", r.max_ratio, r.theoretical_c);
    }
}

#[test]
fn ncn_pooling_ratio_is_bounded_but_role_sensitive() {
    let mut rng = mpnngb::rng::rng_from_seed(21);
    let graphs: Vec<_> = (0..5).map(|i| common::random_graph(&mut rng, &format!("g{i}"), 8, 0.4, 2)).collect();
    let links: Vec<_> = graphs.iter().flat_map(|g| g.edges().map(move |(u, v)| RepresentationTarget::link(g, u, v).unwrap())).collect();
    let pooling = Pooling::NcnPair { k: 1 };
    let cfg = config(2, 2, TransformKind::Identity, pooling, 4);
    let params = DistanceParams::binomial(2, TransformKind::Identity).with_selection(pooling.selection());
    let r = lipschitz_certify(&links, &cfg, &params, 150, 4).unwrap();
    assert!(r.max_ratio <= r.theoretical_c, "{} vs {}", r.max_ratio, r.theoretical_c);
    // (u, v) and (v, u) unroll identically but the pair readout is ordered.
    let (u, v) = graphs[0].edges().next().unwrap();
    let a = RepresentationTarget::link(&graphs[0], u, v).unwrap();
    let b = RepresentationTarget::link(&graphs[0], v, u).unwrap();
    assert_eq!(ud(&a, &b, &params).unwrap(), 0.0);
}

#[test]
fn embed_many_uses_transforms() {
    let mut rng = mpnngb::rng::rng_from_seed(2);
    let g = common::random_graph(&mut rng, "g", 6, 0.5, 2);
    let links: Vec<_> = g.edges().map(|(u, v)| RepresentationTarget::link(&g, u, v).unwrap()).collect();
    let cfg = config(2, 2, TransformKind::PairwiseConditional, Pooling::Sum, 8);
    let many = embed_many(&links, &cfg).unwrap();
    for (t, e) in links.iter().zip(&many) {
        assert_eq!(&embed(t, &cfg).unwrap(), e);
    }
}
