//! Hermitian eigendecomposition and the PSD helpers built on it.
//!
//! The solver is a cyclic complex Jacobi iteration: sweep over all
//! off-diagonal positions, each time applying the exact 2×2 unitary that
//! zeroes that entry, until the off-diagonal mass is at roundoff level.
//! Cyclic Jacobi converges unconditionally on Hermitian matrices and is
//! insensitive to the structured, highly degenerate spectra this crate
//! produces, which defeat shifted-QL library solvers.  The matrices here
//! are small enough (a few hundred rows at most) that Jacobi's extra
//! constant factor over QL is irrelevant.

use crate::error::{Error, Result};
use crate::linalg::matrix::{C64, ComplexMatrix};

/// Eigendecomposition `H = V · diag(values) · V†` of a Hermitian matrix,
/// eigenvalues ascending, eigenvectors as the columns of `vectors`.
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Frobenius norm of the strictly off-diagonal part.
fn off_diagonal_norm(h: &ComplexMatrix) -> f64 {
    let n = h.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += h.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation zeroing `h[p,q]`: conjugates `h` in place by the 2×2
/// unitary built from the phase of the pivot and the real Jacobi angle, and
/// accumulates the same rotation into the columns of `v`.
fn rotate(h: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let pivot = h.get(p, q);
    let r = pivot.norm();
    if r == 0.0 {
        return;
    }
    let phase = pivot / r; // h[p,q] = r·phase
    let a = h.get(p, p).re;
    let b = h.get(q, q).re;
    // Real Jacobi angle for [[a, r], [r, b]]: the stable small root of
    // t² + 2ζt − 1 = 0.
    let zeta = (b - a) / (2.0 * r);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // Rotation columns: e_p ↦ c·e_p − s·conj(phase)·e_q,
    //                   e_q ↦ s·e_p + c·conj(phase)·e_q.
    let sp = phase.conj() * s;
    let cp = phase.conj() * c;
    let n = h.rows();
    for k in 0..n {
        let (hp, hq) = (h.get(k, p), h.get(k, q));
        h.set(k, p, hp * c - hq * sp);
        h.set(k, q, hp * s + hq * cp);
        let (vp, vq) = (v.get(k, p), v.get(k, q));
        v.set(k, p, vp * c - vq * sp);
        v.set(k, q, vp * s + vq * cp);
    }
    let su = phase * s;
    let cu = phase * c;
    for k in 0..n {
        let (hp, hq) = (h.get(p, k), h.get(q, k));
        h.set(p, k, hp * c - hq * su);
        h.set(q, k, hp * s + hq * cu);
    }
    // The pivot is zero by construction; pin it exactly.
    h.set(p, q, C64::new(0.0, 0.0));
    h.set(q, p, C64::new(0.0, 0.0));
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Decomposes a Hermitian matrix; rejects inputs that fail the Hermiticity
/// tolerance.  The matrix is symmetrized before iterating so roundoff-level
/// asymmetry cannot leak into the solver.
pub fn eigh(h: &ComplexMatrix) -> Result<Eigh> {
    h.require_hermitian()?;
    let n = h.rows();
    let mut work = h.hermitize();
    let mut vectors = ComplexMatrix::identity(n);
    let target = work.frobenius_norm() * 1e-14;

    let mut converged = off_diagonal_norm(&work) <= target;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut work, &mut vectors, p, q);
            }
        }
        converged = off_diagonal_norm(&work) <= target;
    }
    if !converged {
        return Err(Error::InvalidArgument(format!(
            "eigendecomposition stalled: off-diagonal norm {:.3e} after {MAX_JACOBI_SWEEPS} sweeps",
            off_diagonal_norm(&work)
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        work.get(a, a)
            .re
            .partial_cmp(&work.get(b, b).re)
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&k| work.get(k, k).re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vectors.get(i, order[j]));
    Ok(Eigh { values, vectors })
}

impl Eigh {
    /// Rebuilds `V · diag(f(λ)) · V†`.
    pub fn reassemble(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            for i in 0..n {
                let wi = col[i] * w;
                for j in 0..n {
                    let add = wi * col[j].conj();
                    let cur = out.get(i, j);
                    out.set(i, j, cur + add);
                }
            }
        }
        out
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(h)?.values[0])
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(*eigh(h)?.values.last().expect("non-empty spectrum"))
}

/// Nearest positive semidefinite matrix in Frobenius norm: clip negative
/// eigenvalues to zero and reassemble.
pub fn clip_to_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eigh(h)?.reassemble(|l| l.max(0.0)))
}

/// `H^{-1/2}` for a positive definite matrix; eigenvalues at or below `floor`
/// are treated as zero (their directions are dropped).
pub fn psd_inverse_sqrt(h: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    Ok(eigh(h)?.reassemble(|l| if l > floor { 1.0 / l.sqrt() } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{C64, HERMITIAN_REL_TOL};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix_spectrum_is_sorted() {
        let h = ComplexMatrix::diagonal(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let d = eigh(&h).unwrap();
        assert!(d.values.iter().zip([1.0, 2.0, 3.0]).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let x = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let d = eigh(&x).unwrap();
        assert!((d.values[0] + 1.0).abs() < 1e-12);
        assert!((d.values[1] - 1.0).abs() < 1e-12);
    }

    fn random_hermitian(n: usize, scale: f64) -> ComplexMatrix {
        // Deterministic pseudo-random Hermitian test matrix.
        let raw = ComplexMatrix::from_fn(n, n, |i, j| {
            let t = (i * n + j) as f64;
            c((t * 0.37).sin() * scale, (t * 0.91).cos() * scale)
        });
        raw.hermitize()
    }

    #[test]
    fn reconstruction_and_orthonormality_on_random_matrix() {
        let h = random_hermitian(16, 2.5);
        let d = eigh(&h).unwrap();
        let rebuilt = d.reassemble(|l| l);
        assert!(rebuilt.distance(&h) <= 1e-9 * h.frobenius_norm().max(1.0));
        let gram = d.vectors.adjoint().mul(&d.vectors);
        assert!(gram.distance(&ComplexMatrix::identity(16)) < 1e-10);
        let mut sorted = d.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, d.values);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut g = ComplexMatrix::identity(3);
        g.set(0, 1, c(0.5, 0.0));
        assert!(eigh(&g).is_err());
        // Just inside the tolerance is accepted.
        let mut h = ComplexMatrix::identity(3);
        h.set(0, 1, c(HERMITIAN_REL_TOL * 0.1, 0.0));
        assert!(eigh(&h).is_ok());
    }

    #[test]
    fn clip_to_psd_removes_negative_part() {
        let h = ComplexMatrix::diagonal(&[c(2.0, 0.0), c(-0.5, 0.0)]);
        let p = clip_to_psd(&h).unwrap();
        assert!(p.distance(&ComplexMatrix::diagonal(&[c(2.0, 0.0), c(0.0, 0.0)])) < 1e-12);
        // An already-PSD matrix is (numerically) untouched.
        let q = random_hermitian(6, 1.0);
        let qq = q.mul(&q.adjoint()); // PSD by construction
        let clipped = clip_to_psd(&qq).unwrap();
        assert!(clipped.distance(&qq) < 1e-9 * qq.frobenius_norm());
    }

    #[test]
    fn inverse_sqrt_inverts_the_square_root() {
        let q = random_hermitian(5, 1.0);
        let spd = q.mul(&q.adjoint()).add(&ComplexMatrix::identity(5)); // strictly PD
        let inv_sqrt = psd_inverse_sqrt(&spd, 1e-12).unwrap();
        let should_be_id = inv_sqrt.mul(&spd).mul(&inv_sqrt);
        assert!(should_be_id.distance(&ComplexMatrix::identity(5)) < 1e-9);
    }

    #[test]
    fn extreme_eigenvalue_helpers() {
        let h = ComplexMatrix::diagonal(&[c(-4.0, 0.0), c(0.25, 0.0), c(7.0, 0.0)]);
        assert!((min_eigenvalue(&h).unwrap() + 4.0).abs() < 1e-12);
        assert!((max_eigenvalue(&h).unwrap() - 7.0).abs() < 1e-12);
    }
}
