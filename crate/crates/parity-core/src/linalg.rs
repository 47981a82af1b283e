//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigendecomposition of a real symmetric matrix, eigenvalues sorted ascending.
///
/// Returns `(values, vectors)` with eigenvectors as columns, matching the
/// eigenvalue order.
pub fn eigh(m: &RMat) -> Result<(DVector<f64>, RMat)> {
    let n = m.nrows();
    let se = m
        .clone()
        .try_symmetric_eigen(1e-13, 10_000)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolve failed (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vectors = RMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &se.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Max absolute deviation of `m` from Hermiticity, relative to its Frobenius norm.
pub fn hermiticity_residual(m: &RMat) -> f64 {
    let norm = m.norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / norm
}

/// Max-entry norm of `U^dagger U - I`.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let p = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((p[(i, j)] - expected).norm());
        }
    }
    worst
}

pub fn to_complex(m: &RMat) -> CMat {
    CMat::from_iterator(m.nrows(), m.ncols(), m.iter().map(|&x| C64::new(x, 0.0)))
}

/// Kronecker product, row-major convention (first factor most significant).
pub fn kron(a: &RMat, b: &RMat) -> RMat {
    a.kronecker(b)
}

/// `|Tr(U1^dagger U2)| / d` for same-dimension operators.
pub fn trace_overlap(u1: &CMat, u2: &CMat) -> Result<f64> {
    if u1.nrows() != u2.nrows() || u1.ncols() != u2.ncols() {
        return Err(Error::DimensionMismatch(u1.nrows(), u2.nrows()));
    }
    let tr: C64 = (u1.adjoint() * u2).trace();
    Ok(tr.norm() / u1.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigh_sorts_eigenvalues() {
        let m = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (vals, vecs) = eigh(&m).unwrap();
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 1.0, epsilon = 1e-12);
        let recon = &vecs * RMat::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!((recon - m).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_overlap_self_is_one() {
        let u = to_complex(&RMat::identity(4, 4));
        assert_relative_eq!(trace_overlap(&u, &u).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_overlap_dimension_mismatch() {
        let a = to_complex(&RMat::identity(2, 2));
        let b = to_complex(&RMat::identity(4, 4));
        assert!(trace_overlap(&a, &b).is_err());
    }
}
