//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column `i` of `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// Reassemble `V f(Lambda) V^*`.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (c, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= s);
        }
        let out = &scaled * self.vectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// Unit vector (Euclidean) from the top eigenspace. When several leading
    /// eigenvalues lie within `degeneracy_tol` of the maximum, the reference
    /// is projected onto that eigenspace; with no usable reference the first
    /// eigenvector is returned.
    pub fn top_vector(&self, reference: Option<&[Complex64]>, degeneracy_tol: f64) -> Vec<Complex64> {
        let top = self.values[0];
        let dim = self.values.iter().take_while(|&&v| top - v <= degeneracy_tol).count();
        if dim > 1 {
            if let Some(r) = reference {
                let r = DVector::from_column_slice(r);
                let basis = self.vectors.columns(0, dim);
                let coeffs = basis.adjoint() * &r;
                let proj = basis * coeffs;
                let norm = proj.norm();
                if norm > 1e-8 * r.norm().max(f64::MIN_POSITIVE) {
                    return proj.iter().map(|z| z / norm).collect();
                }
            }
        }
        self.vector(0)
    }
}

/// Frobenius norm of `M - M^*`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for l in 0..n {
            s += a[(j, l)] * b[(l, j)];
        }
    }
    s
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_fn(4, 4, |r, c| {
            let v = Complex64::new((r + c) as f64, r as f64 - c as f64);
            if r == c { Complex64::new(r as f64 * 2.0, 0.0) } else { v }
        });
        let e = HermitianEigen::new(&m);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = e.map(|l| Complex64::new(l, 0.0));
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn degenerate_top_uses_reference() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let e = HermitianEigen::new(&m);
        let r = [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
        let v = e.top_vector(Some(&r), 1e-12);
        assert!((v[1].norm() - 1.0).abs() < 1e-12);
        assert!(v[0].norm() < 1e-12 && v[2].norm() < 1e-12);
    }
}
