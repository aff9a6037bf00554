//! Quantum channels between symmetric coordinate spaces: Kraus and Choi
//! representations, complete-positivity checks, composition, dilation, and
//! averaging over collective rotations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::eigh::{eigh, psd_inverse_sqrt};
use crate::linalg::matrix::{C64, ComplexMatrix};
use crate::linalg::random::{Seed, gaussian_matrix, haar_unitary_from};
use crate::linalg::tensor::partial_trace;
use crate::state::DensityMatrix;
use crate::sym::{CloneSpec, SymmetricBasis};

/// Tolerance on `Σ K† K = I` for a Kraus set to count as trace preserving.
pub const TRACE_PRESERVING_TOL: f64 = 1e-9;

/// Above this many product terms, composition switches from multiplying
/// Kraus operators to contracting Choi matrices.
pub const KRAUS_COMPOSE_CAP: usize = 4096;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    dim_in: usize,
    dim_out: usize,
}

fn check_kraus_shapes(kraus: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
    let (dim_out, dim_in) = (first.rows(), first.cols());
    if dim_in == 0 || dim_out == 0 {
        return Err(Error::InvalidArgument("zero-dimensional Kraus operator".into()));
    }
    for k in kraus {
        if k.rows() != dim_out || k.cols() != dim_in {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operators disagree on shape: {}x{} vs {}x{}",
                k.rows(),
                k.cols(),
                dim_out,
                dim_in
            )));
        }
    }
    Ok((dim_in, dim_out))
}

impl QuantumChannel {
    /// Builds a channel and checks trace preservation.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (dim_in, dim_out) = check_kraus_shapes(&kraus)?;
        let ch = QuantumChannel { kraus, dim_in, dim_out };
        let defect = ch.tp_defect();
        if defect > TRACE_PRESERVING_TOL {
            return Err(Error::NotTracePreserving { defect, tol: TRACE_PRESERVING_TOL });
        }
        Ok(ch)
    }

    /// Builds a channel from Kraus operators without the trace-preservation
    /// check.  Meant for representing deliberately broken maps (fault
    /// injection, counterexamples in tests); shapes are still validated.
    pub fn from_kraus_unchecked(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (dim_in, dim_out) = check_kraus_shapes(&kraus)?;
        Ok(QuantumChannel { kraus, dim_in, dim_out })
    }

    pub fn identity(dim: usize) -> Self {
        QuantumChannel {
            kraus: vec![ComplexMatrix::identity(dim)],
            dim_in: dim,
            dim_out: dim,
        }
    }

    /// The channel that discards its input and prepares `target`.
    pub fn replace_with_state(dim_in: usize, target: &DensityMatrix) -> Result<Self> {
        let decomp = eigh(target.matrix())?;
        let mut kraus = Vec::new();
        for (k, &lambda) in decomp.values.iter().enumerate() {
            if lambda <= 1e-12 {
                continue;
            }
            let weight = lambda.sqrt();
            let col = decomp.vectors.column(k);
            for i in 0..dim_in {
                let mut op = ComplexMatrix::zeros(target.dim(), dim_in);
                for (r, &amp) in col.iter().enumerate() {
                    op.set(r, i, amp * weight);
                }
                kraus.push(op);
            }
        }
        QuantumChannel::new(kraus)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `‖Σ K† K − I‖_F`.
    pub fn tp_defect(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc = acc.add(&k.adjoint().mul(k));
        }
        acc.distance(&ComplexMatrix::identity(self.dim_in))
    }

    /// Raw linear action `Σ K X K†` on an arbitrary matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.dim_in, "channel input dimension mismatch");
        assert_eq!(x.cols(), self.dim_in, "channel input dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = out.add(&k.mul(x).mul(&k.adjoint()));
        }
        out
    }

    /// Applies the channel to a state and re-validates the output.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} does not match channel input {}",
                rho.dim(),
                self.dim_in
            )));
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }

    /// Choi matrix with the input factor first: the block at input indices
    /// `(i, j)` is `T(|i⟩⟨j|)`.
    pub fn choi(&self) -> ChoiMatrix {
        let side = self.dim_in * self.dim_out;
        let mut matrix = ComplexMatrix::zeros(side, side);
        // C = Σ_K |w_K⟩⟨w_K| with w_K[(i,k)] = K[k,i].
        for k in &self.kraus {
            let mut w = Vec::with_capacity(side);
            for i in 0..self.dim_in {
                for r in 0..self.dim_out {
                    w.push(k.get(r, i));
                }
            }
            for a in 0..side {
                for b in 0..side {
                    let cur = matrix.get(a, b);
                    matrix.set(a, b, cur + w[a] * w[b].conj());
                }
            }
        }
        ChoiMatrix {
            matrix,
            dim_in: self.dim_in,
            dim_out: self.dim_out,
        }
    }

    /// Single isometry `V: input → output ⊗ ancilla` with one ancilla level
    /// per Kraus operator, satisfying `T(ρ) = tr_anc(V ρ V†)`.  Requires a
    /// genuinely trace-preserving channel, since that is exactly `V† V = I`.
    pub fn stinespring_isometry(&self) -> Result<ComplexMatrix> {
        let defect = self.tp_defect();
        if defect > TRACE_PRESERVING_TOL {
            return Err(Error::NotTracePreserving { defect, tol: TRACE_PRESERVING_TOL });
        }
        let anc = self.kraus.len();
        let mut v = ComplexMatrix::zeros(self.dim_out * anc, self.dim_in);
        for (a, k) in self.kraus.iter().enumerate() {
            for r in 0..self.dim_out {
                for col in 0..self.dim_in {
                    v.set(r * anc + a, col, k.get(r, col));
                }
            }
        }
        Ok(v)
    }

    /// CPTP check via the Choi matrix.
    pub fn verify_cptp(&self, tol: f64) -> CptpReport {
        self.choi().verify_cptp(tol)
    }
}

/// Choi matrix of a linear map, input factor first.  Construction checks
/// the shape and Hermiticity; positivity and trace preservation are the
/// business of [`ChoiMatrix::verify_cptp`], so non-CP maps can be
/// represented and then rejected with a diagnosis.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        let side = dim_in
            .checked_mul(dim_out)
            .ok_or_else(|| Error::Overflow("Choi dimension".into()))?;
        if matrix.rows() != side || matrix.cols() != side {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix should be {side}x{side} for dimensions {dim_in}->{dim_out}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.require_hermitian()?;
        Ok(ChoiMatrix { matrix, dim_in, dim_out })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `tr_out(C)`, which equals the input identity exactly when the map is
    /// trace preserving.
    pub fn output_trace(&self) -> ComplexMatrix {
        partial_trace(&self.matrix, &[self.dim_in, self.dim_out], &[0])
            .expect("dimensions fixed at construction")
    }

    pub fn tp_defect(&self) -> f64 {
        self.output_trace()
            .distance(&ComplexMatrix::identity(self.dim_in))
    }

    /// Action of the map recovered from its Choi matrix:
    /// `T(X)[k,l] = Σ_ij X[i,j] · C[(i,k),(j,l)]`.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.dim_in, "Choi input dimension mismatch");
        assert_eq!(x.cols(), self.dim_in, "Choi input dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let weight = x.get(i, j);
                if weight == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..self.dim_out {
                    for l in 0..self.dim_out {
                        let cur = out.get(k, l);
                        out.set(
                            k,
                            l,
                            cur + weight * self.matrix.get(i * self.dim_out + k, j * self.dim_out + l),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} does not match Choi input {}",
                rho.dim(),
                self.dim_in
            )));
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }

    /// Extracts a Kraus set from the spectral decomposition, keeping
    /// eigendirections with eigenvalue above `cutoff` (an absolute
    /// threshold; negative directions at roundoff scale are dropped).
    pub fn to_kraus(&self, cutoff: f64) -> Result<Vec<ComplexMatrix>> {
        let decomp = eigh(&self.matrix)?;
        let mut kraus = Vec::new();
        for (idx, &lambda) in decomp.values.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let col = decomp.vectors.column(idx);
            let w = lambda.sqrt();
            let mut k = ComplexMatrix::zeros(self.dim_out, self.dim_in);
            for i in 0..self.dim_in {
                for r in 0..self.dim_out {
                    k.set(r, i, col[i * self.dim_out + r] * w);
                }
            }
            kraus.push(k);
        }
        if kraus.is_empty() {
            return Err(Error::InvalidArgument(
                "Choi matrix has no positive spectrum; cannot extract Kraus operators".into(),
            ));
        }
        Ok(kraus)
    }

    /// Converts back to a validated (trace-preserving) Kraus channel.
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        QuantumChannel::new(self.to_kraus(1e-12)?)
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        self.matrix.distance(&other.matrix)
    }

    /// Complete positivity and trace preservation at the given tolerance.
    pub fn verify_cptp(&self, tol: f64) -> CptpReport {
        let min_choi_eigenvalue = eigh(&self.matrix)
            .map(|d| d.values[0])
            .expect("Choi matrices are Hermitian by construction");
        let tp_defect = self.tp_defect();
        CptpReport {
            min_choi_eigenvalue,
            tp_defect,
            tol,
            pass: min_choi_eigenvalue >= -tol && tp_defect <= tol,
        }
    }
}

/// Outcome of a CPTP verification.
#[derive(Clone, Copy, Debug)]
pub struct CptpReport {
    pub min_choi_eigenvalue: f64,
    pub tp_defect: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `second ∘ first` as a Kraus channel.  When the product Kraus set would
/// exceed [`KRAUS_COMPOSE_CAP`] operators, the composition is carried out on
/// Choi matrices and a fresh (smaller) Kraus set is extracted.
pub fn compose(second: &QuantumChannel, first: &QuantumChannel) -> Result<QuantumChannel> {
    if first.dim_out != second.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: first map ends in dimension {}, second starts at {}",
            first.dim_out, second.dim_in
        )));
    }
    let count = first.kraus.len() * second.kraus.len();
    if count <= KRAUS_COMPOSE_CAP {
        let mut kraus = Vec::with_capacity(count);
        for k2 in &second.kraus {
            for k1 in &first.kraus {
                kraus.push(k2.mul(k1));
            }
        }
        QuantumChannel::new(kraus)
    } else {
        compose_choi(&second.choi(), &first.choi())?.to_channel()
    }
}

/// Choi matrix of `second ∘ first` by contracting the intermediate index:
/// `C[(i,k),(j,l)] = Σ_{a,b} C1[(i,a),(j,b)] · C2[(a,k),(b,l)]`.
pub fn compose_choi(second: &ChoiMatrix, first: &ChoiMatrix) -> Result<ChoiMatrix> {
    if first.dim_out != second.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: first map ends in dimension {}, second starts at {}",
            first.dim_out, second.dim_in
        )));
    }
    let (din, mid, dout) = (first.dim_in, first.dim_out, second.dim_out);
    let side = din * dout;
    let mut matrix = ComplexMatrix::zeros(side, side);
    for i in 0..din {
        for j in 0..din {
            for k in 0..dout {
                for l in 0..dout {
                    let mut sum = C64::new(0.0, 0.0);
                    for a in 0..mid {
                        for b in 0..mid {
                            sum += first.matrix.get(i * mid + a, j * mid + b)
                                * second.matrix.get(a * dout + k, b * dout + l);
                        }
                    }
                    matrix.set(i * dout + k, j * dout + l, sum);
                }
            }
        }
    }
    ChoiMatrix::new(matrix, din, dout)
}

/// Random CPTP channel: Gaussian Kraus candidates, normalized on the right
/// by `(Σ G† G)^{-1/2}` so the set is exactly trace preserving.
pub fn random_cptp_channel(
    dim_in: usize,
    dim_out: usize,
    kraus_count: usize,
    rng: &mut impl Rng,
) -> Result<QuantumChannel> {
    if kraus_count == 0 {
        return Err(Error::InvalidArgument("need at least one Kraus operator".into()));
    }
    let raw: Vec<ComplexMatrix> = (0..kraus_count)
        .map(|_| gaussian_matrix(dim_out, dim_in, rng))
        .collect();
    let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
    for g in &raw {
        gram = gram.add(&g.adjoint().mul(g));
    }
    let normalizer = psd_inverse_sqrt(&gram.hermitize(), 1e-12)?;
    QuantumChannel::new(raw.iter().map(|g| g.mul(&normalizer)).collect())
}

fn pairwise_mean(mut terms: Vec<ComplexMatrix>) -> ComplexMatrix {
    assert!(!terms.is_empty());
    let count = terms.len();
    // Pairwise tree reduction: a deterministic summation order that is also
    // what a parallel split over sample ranges would produce.
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut iter = terms.chunks(2);
        for chunk in &mut iter {
            next.push(match chunk {
                [a, b] => a.add(b),
                [a] => a.clone(),
                _ => unreachable!(),
            });
        }
        terms = next;
    }
    terms.pop().unwrap().scale_re(1.0 / count as f64)
}

/// Averages a channel over an explicit list of collective rotations: each
/// unitary `u` contributes the conjugated channel
/// `ρ ↦ u_out† T(u_in ρ u_in†) u_out` with `u_in`, `u_out` the restrictions
/// of `u^{⊗inputs}`, `u^{⊗outputs}` to symmetric coordinates.  The average
/// is renormalized to exact trace preservation at the end.
pub fn twirl_with_unitaries(
    choi: &ChoiMatrix,
    spec: &CloneSpec,
    unitaries: &[ComplexMatrix],
    max_dim: usize,
) -> Result<ChoiMatrix> {
    if unitaries.is_empty() {
        return Err(Error::InvalidArgument("twirl needs at least one unitary".into()));
    }
    let (din, dout) = (spec.input_sym_dim(), spec.output_sym_dim());
    if choi.dim_in != din || choi.dim_out != dout {
        return Err(Error::DimensionMismatch(format!(
            "Choi dimensions {}->{} do not match {spec}",
            choi.dim_in, choi.dim_out
        )));
    }
    let basis_in = SymmetricBasis::build(spec.levels(), spec.inputs(), max_dim)?;
    let basis_out = SymmetricBasis::build(spec.levels(), spec.outputs(), max_dim)?;

    let mut terms = Vec::with_capacity(unitaries.len());
    for u in unitaries {
        let u_in = basis_in.compressed_unitary(u)?;
        let u_out = basis_out.compressed_unitary(u)?;
        // Choi of the conjugated channel: (u_inᵀ ⊗ u_out†) C (conj).
        let sandwich = u_in.transpose().kron(&u_out.adjoint())?;
        terms.push(sandwich.mul(&choi.matrix).mul(&sandwich.adjoint()));
    }
    let mean = pairwise_mean(terms);

    // Project the sample mean back onto exact trace preservation.
    let deficit = ComplexMatrix::identity(din)
        .sub(&partial_trace(&mean, &[din, dout], &[0])?)
        .scale_re(1.0 / dout as f64);
    let corrected = mean.add(&deficit.kron(&ComplexMatrix::identity(dout))?);
    ChoiMatrix::new(corrected.hermitize(), din, dout)
}

/// Monte Carlo twirl over `samples` Haar-random collective rotations, one
/// derived sub-stream per sample.
pub fn twirl_mc(
    channel: &QuantumChannel,
    spec: &CloneSpec,
    samples: usize,
    seed: Seed,
    max_dim: usize,
) -> Result<ChoiMatrix> {
    if samples == 0 {
        return Err(Error::InvalidArgument("twirl needs at least one sample".into()));
    }
    let unitaries: Vec<ComplexMatrix> = (0..samples)
        .map(|k| haar_unitary_from(spec.levels(), &mut seed.stream(k as u64)))
        .collect();
    twirl_with_unitaries(&channel.choi(), spec, &unitaries, max_dim)
}

/// Fixed seed behind the probe states of [`covariance_defect`], so defect
/// values are comparable across runs and processes.
const COVARIANCE_PROBE_SEED: Seed = Seed(0xC0_7A_71_0E);

/// How far a channel is from commuting with one collective rotation `u`:
/// the worst Frobenius mismatch of `T(u_in ρ u_in†)` and `u_out T(ρ) u_out†`
/// over a fixed probe set of 10 random symmetric states.
pub fn covariance_defect(
    channel: &QuantumChannel,
    spec: &CloneSpec,
    u: &ComplexMatrix,
    max_dim: usize,
) -> Result<f64> {
    let (din, dout) = (spec.input_sym_dim(), spec.output_sym_dim());
    if channel.dim_in != din || channel.dim_out != dout {
        return Err(Error::DimensionMismatch(format!(
            "channel dimensions {}->{} do not match {spec}",
            channel.dim_in, channel.dim_out
        )));
    }
    let basis_in = SymmetricBasis::build(spec.levels(), spec.inputs(), max_dim)?;
    let basis_out = SymmetricBasis::build(spec.levels(), spec.outputs(), max_dim)?;
    let u_in = basis_in.compressed_unitary(u)?;
    let u_out = basis_out.compressed_unitary(u)?;

    let mut rng = COVARIANCE_PROBE_SEED.rng();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let rho = crate::linalg::random::random_density_from(din, &mut rng);
        let rotated_then_mapped = channel.apply_matrix(&u_in.mul(&rho).mul(&u_in.adjoint()));
        let mapped_then_rotated = u_out.mul(&channel.apply_matrix(&rho)).mul(&u_out.adjoint());
        worst = worst.max(rotated_then_mapped.distance(&mapped_then_rotated));
    }
    Ok(worst)
}
