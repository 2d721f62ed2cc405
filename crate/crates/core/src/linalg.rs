//! Small dense kernels. Feature widths in this crate stay below a few hundred,
//! so plain row-major loops are enough.

use rand::Rng;

use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    /// Entries i.i.d. uniform in `(-a, a)`.
    pub fn random_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, a: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| T::lit(rng.gen_range(-a..a))).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self * x` for `x` of length `cols`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ * x` for `x` of length `rows`.
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(i)) {
                *o += w * xi;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == T::zero())
    }

    /// Largest singular value by power iteration on `selfᵀ self`, run until the
    /// relative change drops below `rel_tol`.
    pub fn spectral_norm(&self, rel_tol: f64) -> T {
        if self.is_zero() || self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        // Deterministic start vector with no zero component.
        let mut v: Vec<T> = (0..self.cols).map(|j| T::one() + T::lit(0.1 * ((j % 7) as f64))).collect();
        normalize(&mut v);
        let tol = T::lit(rel_tol);
        let mut sigma = T::zero();
        for _ in 0..100_000 {
            let mut w = self.tr_mul_vec(&self.mul_vec(&v));
            let lambda = norm2(&w);
            if lambda == T::zero() {
                break;
            }
            w.iter_mut().for_each(|x| *x /= lambda);
            let next = lambda.sqrt();
            let done = (next - sigma).abs() <= tol * next;
            sigma = next;
            v = w;
            if done {
                break;
            }
        }
        sigma
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub fn add_assign<T: Scalar>(acc: &mut [T], x: &[T]) {
    for (a, &b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

pub fn hadamard<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = norm2(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0], vec![0.0, 0.0]]);
        assert!((m.spectral_norm(1e-12) - 5.0f64).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        // u vᵀ with |u| = 3, |v| = 2.
        let m = Matrix::from_rows(&[vec![2.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0]]);
        let m2 = Matrix::from_rows(&[vec![2.0 * 2.0], vec![2.0 * 2.0], vec![2.0]]);
        assert!((m.spectral_norm(1e-12) - 3.0f64).abs() < 1e-9);
        assert!((m2.spectral_norm(1e-12) - 6.0f64).abs() < 1e-9);
    }

    #[test]
    fn transpose_product_matches_explicit() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(m.tr_mul_vec(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
        assert_eq!(m.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }
}
