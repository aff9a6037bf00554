//! Density matrices: Hermitian, positive semidefinite, unit trace.

use crate::error::{Error, Result};
use crate::linalg::eigh::min_eigenvalue;
use crate::linalg::matrix::{C64, ComplexMatrix, outer, vec_norm};

/// Eigenvalues are allowed to dip this far below zero before a matrix is
/// rejected as non-positive.
pub const PSD_EIG_TOL: f64 = 1e-9;

/// Absolute tolerance on `tr(ρ) = 1`.
pub const UNIT_TRACE_TOL: f64 = 1e-10;

/// A validated quantum state.  Construction checks Hermiticity, positivity
/// (up to [`PSD_EIG_TOL`]), and unit trace, so holders of a `DensityMatrix`
/// can rely on those invariants.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dim: usize,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotDensityMatrix(format!(
                "matrix is {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.require_hermitian().map_err(|e| {
            Error::NotDensityMatrix(format!("fails Hermiticity check: {e}"))
        })?;
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > UNIT_TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "trace is {trace} instead of 1"
            )));
        }
        let min = min_eigenvalue(&matrix)
            .map_err(|e| Error::NotDensityMatrix(format!("spectrum check failed: {e}")))?;
        if min < -PSD_EIG_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "smallest eigenvalue {min:.3e} is below -{PSD_EIG_TOL:.0e}"
            )));
        }
        let dim = matrix.rows();
        Ok(DensityMatrix { matrix, dim })
    }

    /// Projector onto a unit vector.  The vector must already be normalized
    /// to within 1e-10.
    pub fn from_pure(state: &[C64]) -> Result<Self> {
        let n = vec_norm(state);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotDensityMatrix(format!(
                "pure state has norm {n}, expected 1"
            )));
        }
        let dim = state.len();
        Ok(DensityMatrix { matrix: outer(state, state), dim })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim >= 1);
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64),
            dim,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `tr(ρ A)` — the expectation value of an observable.
    pub fn expectation(&self, observable: &ComplexMatrix) -> C64 {
        self.matrix.mul(observable).trace()
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.matrix.distance(&other.matrix)
    }
}
