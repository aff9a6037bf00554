//! The permutation-symmetric (bosonic) subspace of `(ℂ^d)^{⊗n}` and the
//! coordinates the rest of the crate computes in.
//!
//! States of `n` indistinguishable `d`-level systems live in the symmetric
//! subspace, whose dimension grows combinatorially instead of exponentially.
//! This module enumerates its occupation-number basis, builds the isometry
//! embedding it into the full product space, and converts back and forth.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::matrix::{C64, ComplexMatrix};
use crate::state::DensityMatrix;

/// `levels^particles` as a checked usize.
pub fn product_space_dim(levels: usize, particles: usize) -> Result<usize> {
    let exp = u32::try_from(particles)
        .map_err(|_| Error::Overflow(format!("{levels}^{particles}")))?;
    levels
        .checked_pow(exp)
        .ok_or_else(|| Error::Overflow(format!("{levels}^{particles}")))
}

fn binomial_u128(n: u128, k: u128) -> Result<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(n - k + i)
            .ok_or_else(|| Error::Overflow(format!("binomial({n},{k})")))?;
        acc /= i; // exact at every step
    }
    Ok(acc)
}

/// Dimension of the symmetric subspace of `particles` systems with `levels`
/// levels each: the number of occupation tuples, `binomial(levels + particles
/// - 1, particles)`.
pub fn sym_dimension(levels: usize, particles: usize) -> Result<usize> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let n = (levels - 1) as u128 + particles as u128;
    let value = binomial_u128(n, particles as u128)?;
    usize::try_from(value).map_err(|_| {
        Error::Overflow(format!("symmetric dimension for ({levels},{particles})"))
    })
}

/// Occupation numbers `(n_1, ..., n_levels)` summing to the particle count:
/// one basis label of the symmetric subspace.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationIndex {
    pub counts: Vec<usize>,
}

impl OccupationIndex {
    pub fn particles(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of distinct product-basis words with these occupation numbers:
    /// the multinomial coefficient `particles! / ∏ counts!`.
    pub fn multiplicity(&self) -> Result<u128> {
        let mut acc: u128 = 1;
        let mut used: u128 = 0;
        for &cnt in &self.counts {
            used += cnt as u128;
            acc = acc
                .checked_mul(binomial_u128(used, cnt as u128)?)
                .ok_or_else(|| Error::Overflow("multinomial coefficient".into()))?;
        }
        Ok(acc)
    }
}

/// All occupation tuples for the given system, in descending lexicographic
/// order — so `(particles, 0, ..., 0)` comes first.
pub fn occupation_basis(levels: usize, particles: usize) -> Vec<OccupationIndex> {
    fn fill(
        remaining_levels: usize,
        remaining: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<OccupationIndex>,
    ) {
        if remaining_levels == 1 {
            let mut counts = prefix.clone();
            counts.push(remaining);
            out.push(OccupationIndex { counts });
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(remaining_levels - 1, remaining - k, prefix, out);
            prefix.pop();
        }
    }
    assert!(levels >= 1);
    let mut out = Vec::new();
    fill(levels, particles, &mut Vec::new(), &mut out);
    out
}

/// Orthonormal basis of the symmetric subspace, realized as the isometry
/// from symmetric coordinates into the full product space.
///
/// Column `c` of `isometry` is the normalized, symmetrized superposition of
/// all product words whose letter counts equal `occupations[c]`; its
/// `multiplicity` nonzero entries all equal `multiplicity^{-1/2}`.  The
/// isometry has real entries, `V† V = I` on symmetric coordinates, and
/// `V V†` is the orthogonal projector onto the symmetric subspace.
pub struct SymmetricBasis {
    levels: usize,
    particles: usize,
    dim: usize,
    full_dim: usize,
    occupations: Vec<OccupationIndex>,
    isometry: ComplexMatrix,
}

impl SymmetricBasis {
    /// Builds the basis; refuses when the full product dimension
    /// `levels^particles` exceeds `max_dim`.
    pub fn build(levels: usize, particles: usize, max_dim: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidArgument("levels must be at least 1".into()));
        }
        let full_dim = product_space_dim(levels, particles)?;
        if full_dim > max_dim {
            return Err(Error::DimensionCapExceeded { dim: full_dim, cap: max_dim });
        }
        let occupations = occupation_basis(levels, particles);
        let dim = occupations.len();
        debug_assert_eq!(dim, sym_dimension(levels, particles)?);

        let column_of: HashMap<&[usize], usize> = occupations
            .iter()
            .enumerate()
            .map(|(c, occ)| (occ.counts.as_slice(), c))
            .collect();
        let weights: Vec<f64> = occupations
            .iter()
            .map(|occ| Ok(1.0 / (occ.multiplicity()? as f64).sqrt()))
            .collect::<Result<_>>()?;

        let mut isometry = ComplexMatrix::zeros(full_dim, dim);
        let mut counts = vec![0usize; levels];
        for word in 0..full_dim {
            counts.iter_mut().for_each(|c| *c = 0);
            let mut rest = word;
            for _ in 0..particles {
                counts[rest % levels] += 1;
                rest /= levels;
            }
            let col = column_of[counts.as_slice()];
            isometry.set(word, col, C64::new(weights[col], 0.0));
        }

        Ok(SymmetricBasis { levels, particles, dim, full_dim, occupations, isometry })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Dimension of the symmetric subspace.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the ambient product space.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn occupations(&self) -> &[OccupationIndex] {
        &self.occupations
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    /// Orthogonal projector `V V†` onto the symmetric subspace, as a matrix
    /// on the full product space.
    pub fn symmetrizer(&self) -> ComplexMatrix {
        self.isometry.mul(&self.isometry.adjoint())
    }

    /// `V† A V`: restricts a full-space operator to symmetric coordinates.
    pub fn compress(&self, full: &ComplexMatrix) -> ComplexMatrix {
        self.isometry.adjoint().mul(full).mul(&self.isometry)
    }

    /// `V A V†`: embeds a symmetric-coordinate operator into the full space.
    pub fn embed(&self, sym: &ComplexMatrix) -> ComplexMatrix {
        self.isometry.mul(sym).mul(&self.isometry.adjoint())
    }

    pub fn embed_vec(&self, sym: &[C64]) -> Vec<C64> {
        self.isometry.matvec(sym)
    }

    pub fn compress_vec(&self, full: &[C64]) -> Vec<C64> {
        self.isometry.adjoint().matvec(full)
    }

    /// Restriction of `u^{⊗particles}` to symmetric coordinates, a
    /// `dim x dim` unitary when `u` is unitary.
    pub fn compressed_unitary(&self, u: &ComplexMatrix) -> Result<ComplexMatrix> {
        if u.rows() != self.levels || u.cols() != self.levels {
            return Err(Error::DimensionMismatch(format!(
                "expected a {0}x{0} matrix, got {1}x{2}",
                self.levels,
                u.rows(),
                u.cols()
            )));
        }
        let mut power = ComplexMatrix::identity(1);
        for _ in 0..self.particles {
            power = power.kron(u)?;
        }
        Ok(self.compress(&power))
    }
}

fn cpow(z: C64, n: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= z;
    }
    acc
}

/// Symmetric coordinates of the tensor power `φ^{⊗particles}` of a unit
/// vector: the coordinate at occupation `(n_1, ..., n_d)` is
/// `sqrt(particles!/∏ n_k!) · ∏ φ_k^{n_k}`.  The result is again a unit
/// vector, computed without ever touching the product space.
pub fn tensor_power_coords(phi: &[C64], particles: usize) -> Result<Vec<C64>> {
    let levels = phi.len();
    if levels == 0 {
        return Err(Error::InvalidArgument("empty state vector".into()));
    }
    let norm = crate::linalg::matrix::vec_norm(phi);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "state must be normalized, got norm {norm}"
        )));
    }
    occupation_basis(levels, particles)
        .iter()
        .map(|occ| {
            let weight = (occ.multiplicity()? as f64).sqrt();
            let mut coord = C64::new(weight, 0.0);
            for (k, &n_k) in occ.counts.iter().enumerate() {
                coord *= cpow(phi[k], n_k);
            }
            Ok(coord)
        })
        .collect()
}

/// The maximally mixed state on symmetric coordinates.
pub fn maximally_mixed_sym(levels: usize, particles: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::maximally_mixed(sym_dimension(levels, particles)?))
}

/// Haar moment operator `∫ dφ (|φ⟩⟨φ|)^{⊗power}` on the full product space:
/// the symmetric projector divided by the symmetric dimension.
pub fn haar_moment(levels: usize, power: usize, max_dim: usize) -> Result<ComplexMatrix> {
    let basis = SymmetricBasis::build(levels, power, max_dim)?;
    Ok(basis.symmetrizer().scale_re(1.0 / basis.dim() as f64))
}

/// Parameters of a cloning problem: `levels`-dimensional systems, `inputs`
/// identical originals, `outputs ≥ inputs` copies requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloneSpec {
    levels: usize,
    inputs: usize,
    outputs: usize,
}

impl CloneSpec {
    pub fn new(levels: usize, inputs: usize, outputs: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidSpec(format!(
                "levels must be at least 2, got {levels}"
            )));
        }
        if inputs < 1 {
            return Err(Error::InvalidSpec("at least one input copy is required".into()));
        }
        if outputs < inputs {
            return Err(Error::InvalidSpec(format!(
                "outputs ({outputs}) must be at least inputs ({inputs})"
            )));
        }
        // Fail early if the symmetric dimensions themselves overflow.
        sym_dimension(levels, outputs)?;
        Ok(CloneSpec { levels, inputs, outputs })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Symmetric dimension on the input side.
    pub fn input_sym_dim(&self) -> usize {
        sym_dimension(self.levels, self.inputs).expect("checked at construction")
    }

    /// Symmetric dimension on the output side.
    pub fn output_sym_dim(&self) -> usize {
        sym_dimension(self.levels, self.outputs).expect("checked at construction")
    }

    /// `levels^inputs`, the full input product dimension.
    pub fn full_input_dim(&self) -> Result<usize> {
        product_space_dim(self.levels, self.inputs)
    }

    /// `levels^outputs`, the full output product dimension.
    pub fn full_output_dim(&self) -> Result<usize> {
        product_space_dim(self.levels, self.outputs)
    }

    /// `levels^(inputs+outputs)`, the dimension needed to average fidelities
    /// over all input states at once.
    pub fn joint_dim(&self) -> Result<usize> {
        product_space_dim(self.levels, self.inputs + self.outputs)
    }
}

impl std::fmt::Display for CloneSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={} {}->{}", self.levels, self.inputs, self.outputs)
    }
}
