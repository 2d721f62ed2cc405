//! Color refinement (1-WL). Two nodes share a color after `L` rounds exactly
//! when their depth-`L` unrolling trees are isomorphic.

use std::collections::BTreeMap;

use crate::graph::{feature_key, FeaturedGraph};
use crate::Scalar;

/// Colors after `rounds` refinement steps, starting from the feature vectors.
/// Color ids are dense and assigned in order of the sorted signatures, so they
/// are comparable across calls only on the same graph.
pub fn refine<T: Scalar>(graph: &FeaturedGraph<T>, rounds: usize) -> Vec<usize> {
    let keys: Vec<Vec<u64>> = graph.features().iter().map(|f| feature_key(f)).collect();
    let mut colors = densify(&keys);
    for _ in 0..rounds {
        let sigs: Vec<(usize, Vec<usize>)> = (0..graph.node_count())
            .map(|v| {
                let mut ns: Vec<usize> = graph.neighbors(v).iter().map(|&u| colors[u]).collect();
                ns.sort_unstable();
                (colors[v], ns)
            })
            .collect();
        colors = densify(&sigs);
    }
    colors
}

/// Colors of the initial features only.
pub fn initial_colors<T: Scalar>(graph: &FeaturedGraph<T>) -> Vec<usize> {
    refine(graph, 0)
}

fn densify<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    for k in keys {
        ids.entry(k.clone()).or_insert(0);
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    keys.iter().map(|k| ids[k]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_endpoints_share_a_color() {
        let g = FeaturedGraph::new("p", 4, &[(0, 1), (1, 2), (2, 3)], vec![vec![1.0]; 4]).unwrap();
        let c = refine(&g, 3);
        assert_eq!(c[0], c[3]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn regular_graph_is_monochromatic() {
        let g = FeaturedGraph::new("c", 5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], vec![vec![1.0]; 5]).unwrap();
        assert!(refine(&g, 4).iter().all(|&c| c == 0));
    }

    #[test]
    fn features_split_colors() {
        let g = FeaturedGraph::new("k", 2, &[(0, 1)], vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(initial_colors(&g), vec![0, 1]);
    }
}
