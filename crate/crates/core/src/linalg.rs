//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::Scalar;

/// Eigen-decomposition of a symmetric matrix with eigenpairs ordered by
/// descending eigenvalue. Equal eigenvalues keep the solver's output order,
/// and each eigenvector goes through [`fix_sign`].
pub fn symmetric_eigen_desc<T: Scalar>(matrix: DMatrix<T>) -> (Vec<T>, Vec<Vec<T>>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<T> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

/// Flips `v` so that its first element of largest magnitude is positive.
///
/// Magnitudes within a relative [`Scalar::tie_tolerance`] of the maximum
/// count as largest, so mirror-symmetric vectors resolve to the lowest index.
pub fn fix_sign<T: Scalar>(v: &mut [T]) {
    let max = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if max == T::zero() {
        return;
    }
    let cutoff = max * (T::one() - T::tie_tolerance());
    if let Some(lead) = v.iter().copied().find(|x| x.abs() >= cutoff) {
        if lead < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Cosine of the angle between `a` and `b`; zero if either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let denom = norm(a) * norm(b);
    if denom == T::zero() {
        T::zero()
    } else {
        dot(a, b) / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_pairs_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = symmetric_eigen_desc::<f64>(m);
        assert_eq!(vals, vec![5.0, 2.0, 1.0]);
        assert_eq!(vecs[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn sign_follows_first_largest_entry() {
        let mut v = vec![0.1, -0.7, 0.7];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.7, -0.7]);
        let mut w = vec![0.0_f64; 3];
        fix_sign(&mut w);
        assert_eq!(w, vec![0.0; 3]);
    }
}
