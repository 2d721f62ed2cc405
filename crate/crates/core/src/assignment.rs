//! Exact square linear assignment (Kuhn–Munkres with potentials, `O(n³)`).
//!
//! Costs only need to be finite floats, which rules out the integer-cost
//! solvers in the usual crates.

use crate::Scalar;

/// Optimal assignment of a square cost matrix given as rows.
/// Returns the minimum total cost and `perm` with row `i` matched to column `perm[i]`.
pub fn solve<T: Scalar>(cost: &[Vec<T>]) -> (T, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (T::zero(), Vec::new());
    }
    debug_assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based potentials formulation; column 0 is a sentinel.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    // Re-sum from the original costs to avoid drift in the potentials.
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (total, perm)
}

/// Optimal value only.
pub fn min_cost<T: Scalar>(cost: &[Vec<T>]) -> T {
    solve(cost).0
}

/// The lexicographically smallest optimal assignment, comparing costs with
/// absolute tolerance `tol`. Quadratically many re-solves; meant for witnesses
/// on small matrices.
pub fn lex_min_solve<T: Scalar>(cost: &[Vec<T>], tol: T) -> (T, Vec<usize>) {
    let n = cost.len();
    let (best, _) = solve(cost);
    let big = cost.iter().flatten().fold(T::zero(), |a, &c| a + c.abs()) + T::one();
    let mut fixed: Vec<Vec<T>> = cost.to_vec();
    let mut perm = vec![0; n];
    for i in 0..n {
        for j in 0..n {
            if fixed[i][j] >= big {
                continue;
            }
            let mut trial = fixed.clone();
            for (jj, c) in trial[i].iter_mut().enumerate() {
                if jj != j {
                    *c = big;
                }
            }
            for (ii, row) in trial.iter_mut().enumerate() {
                if ii != i {
                    row[j] = big;
                }
            }
            if (solve(&trial).0 - best).abs() <= tol {
                fixed = trial;
                perm[i] = j;
                break;
            }
        }
    }
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (total, perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i][j] + rec(cost, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(solve::<f64>(&[]), (0.0, vec![]));
        assert_eq!(solve(&[vec![2.5f64]]), (2.5, vec![0]));
    }

    #[test]
    fn classic_three_by_three() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let (v, p) = solve(&c);
        assert_eq!(v, 5.0);
        assert_eq!(p, vec![1, 0, 2]);
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(7);
        for n in 1..=6 {
            for _ in 0..50 {
                let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
                assert!((min_cost(&c) - brute(&c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lex_min_prefers_identity_on_ties() {
        let c = vec![vec![1.0f64; 3]; 3];
        assert_eq!(lex_min_solve(&c, 1e-9).1, vec![0, 1, 2]);
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(lex_min_solve(&c, 1e-9), (0.0, vec![1, 0]));
    }
}
