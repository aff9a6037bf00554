//! Dense complex matrices and vectors, row-major storage.
//!
//! Everything downstream (symmetric-subspace bases, channels, the optimizer)
//! runs on this one type, so it stays small and predictable: owned `Vec`
//! storage, explicit shapes, no views.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shorthand for the scalar type used throughout the crate.
pub type C64 = Complex64;

/// Relative tolerance for Hermiticity checks: a matrix `A` counts as
/// Hermitian when `‖A − A†‖_F ≤ HERMITIAN_REL_TOL · max(1, ‖A‖_F)`.
pub const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Hard per-side cap on Kronecker products, as a last line of defence
/// against runaway allocations.  Structured dimension caps are enforced by
/// the higher-level constructors; this one only rejects absurd requests.
pub const KRON_SIDE_CAP: usize = 1 << 20;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data; the length must match the shape.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries provided for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matrix product shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let lhs_row = i * other.cols;
                let rhs_row = k * other.cols;
                for j in 0..other.cols {
                    out.data[lhs_row + j] += a * other.data[rhs_row + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum::<C64>()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conjugate(&self) -> Self {
        let data = self.data.iter().map(|a| a.conj()).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).frobenius_norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖_F`, the absolute deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square(), "Hermiticity of a non-square matrix");
        let mut sum = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self.get(i, j) - self.get(j, i).conj();
                sum += d.norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_REL_TOL * self.frobenius_norm().max(1.0)
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let tol = HERMITIAN_REL_TOL * self.frobenius_norm().max(1.0);
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect, tol })
        }
    }

    /// `(A + A†)/2`; cheap symmetrization used before eigendecompositions.
    pub fn hermitize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// Kronecker product `self ⊗ other`, with the left operand as the most
    /// significant factor: entry `((i·p + k), (j·q + l)) = a_ij · b_kl`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let rows = self
            .rows
            .checked_mul(other.rows)
            .filter(|&r| r <= KRON_SIDE_CAP)
            .ok_or(Error::DimensionCapExceeded {
                dim: usize::MAX,
                cap: KRON_SIDE_CAP,
            })?;
        let cols = self
            .cols
            .checked_mul(other.cols)
            .filter(|&c| c <= KRON_SIDE_CAP)
            .ok_or(Error::DimensionCapExceeded {
                dim: usize::MAX,
                cap: KRON_SIDE_CAP,
            })?;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        let limit = 12;
        for i in 0..self.rows.min(limit) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(limit) {
                let e = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", e.re, e.im)?;
            }
            if self.cols > limit {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows > limit {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// `⟨a|b⟩` with the convention of conjugating the left argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "inner product shape mismatch");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `v / ‖v‖`; panics on the zero vector.
pub fn vec_normalize(v: &[C64]) -> Vec<C64> {
    let n = vec_norm(v);
    assert!(n > 0.0, "cannot normalize the zero vector");
    v.iter().map(|x| x / n).collect()
}

/// Kronecker product of vectors, left factor most significant.
pub fn vec_kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &[C64], b: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Computational basis vector `|index⟩` of the given dimension.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    assert!(index < dim);
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}
