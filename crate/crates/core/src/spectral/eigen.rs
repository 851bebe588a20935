use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};

use crate::error::{Error, Result};
use crate::panel::CorrelationMatrix;

/// Sorted spectral decomposition of a symmetric matrix.
///
/// Eigenvalues are in descending order and the k-th column of `vectors` is
/// the unit eigenvector for the k-th eigenvalue. Each eigenvector is signed
/// so that its entries sum to a non-negative number; when the sum vanishes
/// the first non-negligible entry is made positive. Inside a degenerate
/// eigenspace the basis itself is whatever the solver returned.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

const SIGN_SUM_TOL: f64 = 1e-10;
const SIGN_ENTRY_TOL: f64 = 1e-12;

impl EigenSystem {
    /// Builds an eigensystem from raw parts, sorting and applying the sign
    /// convention. `vectors` columns must correspond to `values`.
    pub fn from_parts(values: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        let n = values.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} eigenvalues for a {}x{} eigenvector matrix",
                vectors.nrows(),
                vectors.ncols()
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        // stable: equal eigenvalues keep solver order
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let mut sorted_vectors = DMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            let mut v = vectors.column(i).into_owned();
            if needs_flip(&v) {
                v.neg_mut();
            }
            sorted_vectors.set_column(k, &v);
        }
        Ok(Self {
            values: sorted_values,
            vectors: sorted_vectors,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Eigenvector for the k-th largest eigenvalue (0-based).
    pub fn vector(&self, k: usize) -> DVectorView<'_, f64> {
        self.vectors.column(k)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Σ_k λ_k e_k e_kᵀ
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(&self.values)
    }

    /// Rebuilds a matrix in this basis with replacement eigenvalues.
    pub fn reconstruct_with(&self, values: &[f64]) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, k| {
            self.vectors[(i, k)] * values[k]
        });
        let mut m = scaled * self.vectors.transpose();
        symmetrize(&mut m);
        m
    }

    /// Max |e_jᵀe_k − δ_jk| over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.tr_mul(&self.vectors);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g[(j, k)] - target).abs());
            }
        }
        worst
    }
}

fn needs_flip(v: &DVector<f64>) -> bool {
    let s = v.sum();
    if s > SIGN_SUM_TOL {
        false
    } else if s < -SIGN_SUM_TOL {
        true
    } else {
        v.iter()
            .find(|x| x.abs() > SIGN_ENTRY_TOL)
            .is_some_and(|&x| x < 0.0)
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn eigendecompose(c: &CorrelationMatrix) -> Result<EigenSystem> {
    eigendecompose_symmetric(c.entries())
}

/// Eigendecomposition of any real symmetric matrix.
pub fn eigendecompose_symmetric(m: &DMatrix<f64>) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::InvalidShape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let max_iter = 200 * n.max(10);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::ConvergenceFailure(format!("no convergence after {max_iter} iterations"))
    })?;
    EigenSystem::from_parts(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Eigenvalues only, in descending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
