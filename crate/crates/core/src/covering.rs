//! ε-covers of a finite set of targets under a precomputed pseudo-metric.

use crate::{Error, Result, Scalar};

/// Largest point count [`exact_cover`] accepts.
pub const EXACT_COVER_LIMIT: usize = 15;

/// Square, symmetric, nonnegative matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Validates the matrix. Symmetry is checked with absolute tolerance 1e-9
    /// and then enforced exactly by copying the upper triangle.
    pub fn new(mut rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let tol = T::lit(1e-9);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::MalformedMatrix(format!("row {i} has {} entries, expected {n}", r.len())));
            }
            if r[i] != T::zero() {
                return Err(Error::MalformedMatrix(format!("nonzero diagonal at {i}")));
            }
            if let Some(j) = r.iter().position(|x| !x.is_finite() || *x < T::zero()) {
                return Err(Error::MalformedMatrix(format!("entry ({i},{j}) is negative or not finite")));
            }
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in i + 1..n {
                if (rows[i][j] - rows[j][i]).abs() > tol {
                    return Err(Error::MalformedMatrix(format!("asymmetric at ({i},{j})")));
                }
                rows[j][i] = rows[i][j];
            }
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Upper-triangle entries `(i, j, d)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.rows[i][j])))
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> Option<T> {
        self.pairs().map(|(_, _, d)| d).filter(|&d| d > T::zero()).reduce(T::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cover<T> {
    pub epsilon: T,
    /// Center point indices, ascending.
    pub centers: Vec<usize>,
    /// `assignment[i]` is the point index of the center owning point `i`.
    pub assignment: Vec<usize>,
    pub exact: bool,
}

impl<T: Scalar> Cover<T> {
    fn from_centers(m: &DistanceMatrix<T>, epsilon: T, mut centers: Vec<usize>, exact: bool) -> Self {
        centers.sort_unstable();
        let assignment = (0..m.len())
            .map(|i| {
                // Strict comparison keeps the smallest center on ties.
                let mut best = centers[0];
                for &c in &centers[1..] {
                    if m.get(i, c) < m.get(i, best) {
                        best = c;
                    }
                }
                best
            })
            .collect();
        Self { epsilon, centers, assignment, exact }
    }

    pub fn size(&self) -> usize {
        self.centers.len()
    }

    /// Largest distance from a point to its center.
    pub fn radius(&self, m: &DistanceMatrix<T>) -> T {
        self.assignment.iter().enumerate().map(|(i, &c)| m.get(i, c)).fold(T::zero(), T::max)
    }

    /// Member point indices of each cell, in center order.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        self.centers.iter().map(|&c| (0..self.assignment.len()).filter(|&i| self.assignment[i] == c).collect()).collect()
    }

    /// Largest intra-cell distance per cell, in center order.
    pub fn cell_diameters(&self, m: &DistanceMatrix<T>) -> Vec<T> {
        self.cells()
            .iter()
            .map(|cell| {
                let mut d = T::zero();
                for (k, &i) in cell.iter().enumerate() {
                    for &j in &cell[k + 1..] {
                        d = d.max(m.get(i, j));
                    }
                }
                d
            })
            .collect()
    }

    pub fn is_valid(&self, m: &DistanceMatrix<T>) -> bool {
        self.radius(m) <= self.epsilon
    }
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Farthest-point greedy cover starting from point 0; ties go to the smallest index.
/// Its size upper-bounds the covering number.
pub fn greedy_cover<T: Scalar>(m: &DistanceMatrix<T>, epsilon: T) -> Result<Cover<T>> {
    check_epsilon(epsilon)?;
    if m.is_empty() {
        return Err(Error::MalformedMatrix("empty matrix".into()));
    }
    let mut centers = vec![0];
    let mut nearest: Vec<T> = m.rows()[0].clone();
    loop {
        let (far, &d) = nearest.iter().enumerate().fold((0, &T::neg_infinity()), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if d <= epsilon {
            break;
        }
        centers.push(far);
        for (i, n) in nearest.iter_mut().enumerate() {
            *n = n.min(m.get(i, far));
        }
    }
    Ok(Cover::from_centers(m, epsilon, centers, false))
}

/// Minimum-cardinality cover by exhaustive subset search in order of size,
/// then lexicographic order.
pub fn exact_cover<T: Scalar>(m: &DistanceMatrix<T>, epsilon: T, max_n: usize) -> Result<Cover<T>> {
    check_epsilon(epsilon)?;
    let n = m.len();
    let limit = max_n.min(EXACT_COVER_LIMIT);
    if n > limit {
        return Err(Error::GuardExceeded { size: n, limit });
    }
    if n == 0 {
        return Err(Error::MalformedMatrix("empty matrix".into()));
    }
    let full: u32 = (1 << n) - 1;
    let balls: Vec<u32> = (0..n).map(|c| (0..n).filter(|&i| m.get(c, i) <= epsilon).fold(0, |b, i| b | 1 << i)).collect();
    for k in 1..=n {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            if combo.iter().fold(0, |b, &c| b | balls[c]) == full {
                return Ok(Cover::from_centers(m, epsilon, combo, true));
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    unreachable!("the full point set always covers itself")
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// `(3/ε)^{d·Q}` for targets with features in `(−1, 1)^d` and unrolling trees
/// of arity `q` and depth `L`, where `Q` counts nodes of a complete tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoveringBound {
    pub q_nodes: f64,
    pub log_value: f64,
    /// `None` when the value overflows `f64`.
    pub value: Option<f64>,
}

pub fn degree_bounded_covering_bound(d: usize, q: usize, depth: usize, epsilon: f64) -> Result<CoveringBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let q_nodes = match q {
        0 => 1.0,
        1 => (depth + 1) as f64,
        _ => ((q as f64).powi(depth as i32 + 1) - 1.0) / (q as f64 - 1.0),
    };
    let log_value = d as f64 * q_nodes * (3.0 / epsilon).ln();
    let value = log_value.exp();
    Ok(CoveringBound { q_nodes, log_value, value: value.is_finite().then_some(value) })
}

/// One row of an ε sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub epsilon: T,
    pub greedy: Cover<T>,
    pub exact: Option<Cover<T>>,
}

/// Greedy cover at each ε, plus the exact cover when `n ≤ exact_limit`.
pub fn cover_sweep<T: Scalar>(m: &DistanceMatrix<T>, grid: &[T], exact_limit: usize) -> Result<Vec<SweepRow<T>>> {
    grid.iter()
        .map(|&eps| {
            let greedy = greedy_cover(m, eps)?;
            let exact = if m.len() <= exact_limit.min(EXACT_COVER_LIMIT) { Some(exact_cover(m, eps, exact_limit)?) } else { None };
            Ok(SweepRow { epsilon: eps, greedy, exact })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix<f64> {
        DistanceMatrix::new(xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect()).unwrap()
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(vec![vec![1.0]]).is_err());
        assert!(DistanceMatrix::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(vec![vec![0.0, 1.0]]).is_err());
        assert!(DistanceMatrix::<f64>::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn all_zero_matrix_has_one_center() {
        let m = DistanceMatrix::new(vec![vec![0.0f64; 4]; 4]).unwrap();
        assert_eq!(greedy_cover(&m, 0.1).unwrap().size(), 1);
        assert_eq!(exact_cover(&m, 0.1, 15).unwrap().size(), 1);
    }

    #[test]
    fn two_far_points() {
        let m = line(&[0.0, 3.0]);
        assert_eq!(greedy_cover(&m, 1.0).unwrap().centers, vec![0, 1]);
    }

    #[test]
    fn middle_point_covers_collinear_triple() {
        let m = line(&[0.0, 1.0, 2.0]);
        let c = exact_cover(&m, 1.0, 15).unwrap();
        assert_eq!(c.centers, vec![1]);
        assert!(c.exact);
        // Greedy starts at 0 and needs a second center.
        assert_eq!(greedy_cover(&m, 1.0).unwrap().size(), 2);
    }

    #[test]
    fn tiny_epsilon_needs_every_point() {
        let m = line(&[0.0, 0.5, 2.0, 7.0]);
        assert_eq!(exact_cover(&m, 0.4, 15).unwrap().size(), 4);
    }

    #[test]
    fn ties_go_to_smallest_center() {
        let m = line(&[0.0, 1.0, 2.0]);
        let c = Cover::from_centers(&m, 1.0, vec![2, 0], false);
        assert_eq!(c.assignment, vec![0, 0, 2]);
        assert_eq!(c.cells(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn exact_guard() {
        let m = line(&(0..16).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(exact_cover(&m, 1.0, 20), Err(Error::GuardExceeded { size: 16, limit: 15 })));
    }

    #[test]
    fn covering_bound_values() {
        assert!(degree_bounded_covering_bound(1, 1, 1, 3.0).is_err());
        let b = degree_bounded_covering_bound(1, 2, 1, 0.5).unwrap();
        assert_eq!(b.q_nodes, 3.0);
        assert!((b.value.unwrap() - 216.0).abs() < 1e-9);
        let b = degree_bounded_covering_bound(2, 2, 2, 0.3).unwrap();
        assert_eq!(b.q_nodes, 7.0);
        assert!((b.log_value - 14.0 * 10f64.ln()).abs() < 1e-9);
        assert!((b.value.unwrap() / 1e14 - 1.0).abs() < 1e-9);
        assert_eq!(degree_bounded_covering_bound(1, 1, 1, 0.5).unwrap().q_nodes, 2.0);
        assert!(degree_bounded_covering_bound(100, 10, 6, 0.01).unwrap().value.is_none());
    }
}
