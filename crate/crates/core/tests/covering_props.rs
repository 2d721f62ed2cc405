use mpnngb::covering::{cover_sweep, degree_bounded_covering_bound, exact_cover, greedy_cover, DistanceMatrix};
use proptest::prelude::*;

fn euclidean(pts: &[(f64, f64)]) -> DistanceMatrix<f64> {
    DistanceMatrix::new(pts.iter().map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect()).collect()).unwrap()
}

fn points(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..=max)
}

/// Brute force over all subsets in increasing size.
fn brute_min_cover(m: &DistanceMatrix<f64>, eps: f64) -> usize {
    let n = m.len();
    (1u32..(1 << n)).filter(|s| (0..n).all(|i| (0..n).any(|c| s & (1 << c) != 0 && m.get(i, c) <= eps))).map(|s| s.count_ones() as usize).min().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn covers_are_valid_and_exact_is_minimal(pts in points(10), eps in 0.05f64..3.0) {
        let m = euclidean(&pts);
        let g = greedy_cover(&m, eps).unwrap();
        let e = exact_cover(&m, eps, 15).unwrap();
        prop_assert!(g.is_valid(&m) && e.is_valid(&m));
        prop_assert!(g.radius(&m) <= eps && e.radius(&m) <= eps);
        prop_assert!(e.size() <= g.size());
        prop_assert_eq!(e.size(), brute_min_cover(&m, eps));
        for d in g.cell_diameters(&m).into_iter().chain(e.cell_diameters(&m)) {
            prop_assert!(d <= 2.0 * eps + 1e-12);
        }
        let covered: usize = g.cells().iter().map(Vec::len).sum();
        prop_assert_eq!(covered, m.len());
    }

    #[test]
    fn exact_cover_size_is_monotone(pts in points(12), a in 0.05f64..3.0, b in 0.05f64..3.0) {
        let m = euclidean(&pts);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(exact_cover(&m, hi, 15).unwrap().size() <= exact_cover(&m, lo, 15).unwrap().size());
        let sweep = cover_sweep(&m, &[lo, hi], 15).unwrap();
        prop_assert!(sweep.iter().all(|r| r.exact.is_some()));
    }

    #[test]
    fn covering_bound_decreases_in_epsilon(d in 1usize..4, q in 0usize..4, depth in 0usize..4, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x = degree_bounded_covering_bound(d, q, depth, lo).unwrap();
        let y = degree_bounded_covering_bound(d, q, depth, hi).unwrap();
        prop_assert!(y.log_value <= x.log_value);
        prop_assert!(x.log_value > 0.0);
    }
}

#[test]
fn complete_tree_node_counts() {
    assert_eq!(degree_bounded_covering_bound(1, 0, 5, 0.5).unwrap().q_nodes, 1.0);
    assert_eq!(degree_bounded_covering_bound(1, 1, 3, 0.5).unwrap().q_nodes, 4.0);
    assert_eq!(degree_bounded_covering_bound(1, 2, 2, 0.5).unwrap().q_nodes, 7.0);
    assert_eq!(degree_bounded_covering_bound(1, 3, 2, 0.5).unwrap().q_nodes, 13.0);
    assert!(degree_bounded_covering_bound(1, 3, 2, 1.0).is_err());
}

#[test]
fn exact_cover_refuses_large_inputs() {
    let pts: Vec<_> = (0..16).map(|i| (i as f64, 0.0)).collect();
    let m = euclidean(&pts);
    assert!(exact_cover(&m, 0.5, 15).is_err());
    assert!(cover_sweep(&m, &[0.5], 15).unwrap()[0].exact.is_none());
}
