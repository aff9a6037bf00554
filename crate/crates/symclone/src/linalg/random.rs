//! Seeded randomness: Haar-distributed unitaries, random pure states, and
//! random density matrices.
//!
//! All sampling is driven by a counter-based generator keyed by [`Seed`].
//! Independent sub-streams are derived from `(seed, stream index)`, so
//! Monte Carlo loops can hand out one stream per sample and stay
//! reproducible no matter how the samples are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::matrix::{C64, ComplexMatrix, inner, vec_norm};

/// Master seed for all randomized routines.  The same seed always produces
/// the same samples on a given build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Generator for stream 0.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent generator for the given sub-stream.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(index);
        rng
    }
}

/// Standard complex Gaussian: real and imaginary parts are independent
/// normals with variance 1/2, so `E[|z|²] = 1`.
pub fn standard_complex(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    (0..dim).map(|_| standard_complex(rng)).collect()
}

/// Gaussian matrix with independent standard complex entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| standard_complex(rng))
}

/// Haar-distributed unitary, drawn with the supplied generator.
///
/// A complex Gaussian matrix is orthonormalized column by column
/// (Gram–Schmidt with a re-orthogonalization pass).  Because each pivot is
/// normalized by its positive real length, this is the unique QR with a
/// positive diagonal, which makes the resulting distribution exactly
/// invariant under left and right multiplication by fixed unitaries.
pub fn haar_unitary_from(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    assert!(dim >= 1, "unitary needs dimension at least 1");
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = gaussian_vector(dim, rng);
        // Two orthogonalization passes keep the loss of orthogonality at
        // roundoff level even for nearly dependent draws.
        for _ in 0..2 {
            for q in &cols {
                let overlap = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= overlap * qi;
                }
            }
        }
        let n = vec_norm(&v);
        if n < 1e-12 {
            // Essentially a measure-zero event; draw a fresh column.
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= n;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Haar-distributed unitary for a seed (stream 0).
pub fn haar_unitary(dim: usize, seed: Seed) -> ComplexMatrix {
    haar_unitary_from(dim, &mut seed.rng())
}

/// Uniformly random pure state: a normalized complex Gaussian vector.
pub fn random_pure_state_from(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    assert!(dim >= 1, "state needs dimension at least 1");
    loop {
        let v = gaussian_vector(dim, rng);
        let n = vec_norm(&v);
        if n >= 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniformly random pure state for a seed (stream 0).
pub fn random_pure_state(dim: usize, seed: Seed) -> Vec<C64> {
    random_pure_state_from(dim, &mut seed.rng())
}

/// Random full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density_from(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let gg = g.mul(&g.adjoint());
    let t = gg.trace().re;
    gg.scale_re(1.0 / t)
}
