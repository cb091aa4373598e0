//! Small dense complex linear algebra used by the Newton solvers.

use nalgebra::{DMatrix, DVector};

use crate::family::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn matrix_from_rows(rows: &[Vec<C64>]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn rows_of(a: &CMatrix) -> Vec<Vec<C64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

fn finite(v: &CVector) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Solves `a x = b`. Falls back to an SVD least-squares solve when the LU
/// factorization is singular, so rank-deficient Newton steps still move.
pub fn solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    if let Some(x) = a.clone().lu().solve(b) {
        if finite(&x) {
            return Some(x);
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return None;
    }
    let x = svd.solve(b, smax * 1e-13).ok()?;
    finite(&x).then_some(x)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `rel · σ_max`.
pub fn numerical_rank(a: &CMatrix, rel: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel * smax).count()
}

pub fn determinant(a: &CMatrix) -> C64 {
    a.clone().determinant()
}

/// Product of the Euclidean norms of the rows.
pub fn row_norm_product(a: &CMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_solve() {
        let a = matrix_from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(2.0, 1.0)],
            vec![C64::new(2.0, 0.0), C64::new(4.0, 2.0)],
        ]);
        assert_eq!(numerical_rank(&a, 1e-6), 1);
        let b = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let x = solve(&a, &b).unwrap();
        assert!(((&a * &x) - &b).norm() < 1e-10);
        let id = CMatrix::identity(3, 3);
        assert_eq!(numerical_rank(&id, 1e-6), 3);
        assert!((determinant(&id) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
