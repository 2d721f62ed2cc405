#![allow(dead_code)]

use mpnngb::graph::FeaturedGraph;
use proptest::prelude::*;
use rand::Rng;

/// Edge list of the graph on `n` nodes whose upper-triangle pairs are switched
/// on by `mask`, in row-major order.
pub fn edges_from_mask(n: usize, mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if mask[k] {
                out.push((u, v));
            }
            k += 1;
        }
    }
    out
}

/// Random graphs with `1..=max_n` nodes and features drawn from a small value
/// set, so that distinct nodes often share features.
pub fn graph_strategy(max_n: usize, d: usize, id: &'static str) -> impl Strategy<Value = FeaturedGraph<f64>> {
    (1..=max_n).prop_flat_map(move |n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(proptest::bool::weighted(0.4), pairs),
            proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(1.0), Just(-0.5), Just(2.0)], d), n),
        )
            .prop_map(move |(mask, feats)| FeaturedGraph::new(id, n, &edges_from_mask(n, &mask), feats).unwrap())
    })
}

/// Erdős–Rényi graph with features uniform in `[-1, 1]^d` away from zero.
pub fn random_graph(rng: &mut impl Rng, id: &str, n: usize, p: f64, d: usize) -> FeaturedGraph<f64> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let feats = (0..n).map(|_| (0..d).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.1..1.0) } else { rng.gen_range(-1.0..-0.1) }).collect()).collect();
    FeaturedGraph::new(id, n, &edges, feats).unwrap()
}

/// Random graph with features from a three-value palette.
pub fn random_palette_graph(rng: &mut impl Rng, id: &str, n: usize, p: f64, d: usize) -> FeaturedGraph<f64> {
    let mut g = random_graph(rng, id, n, p, d);
    let palette = [1.0, -0.5, 2.0];
    let feats = (0..n).map(|_| (0..d).map(|_| palette[rng.gen_range(0..3)]).collect()).collect();
    g = FeaturedGraph::new(id, n, &g.edges().collect::<Vec<_>>(), feats).unwrap();
    g
}
