//! The optimal symmetric cloning channel in symmetric coordinates, with its
//! closed-form figures of merit in exact rational arithmetic.

use num_rational::Ratio;

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::matrix::ComplexMatrix;
use crate::linalg::random::{Seed, random_pure_state_from};
use crate::linalg::tensor::partial_trace;
use crate::state::DensityMatrix;
use crate::sym::{CloneSpec, SymmetricBasis, product_space_dim, sym_dimension, tensor_power_coords};

/// For each product-basis word, the unique occupation column its isometry
/// row touches.
fn word_columns(basis: &SymmetricBasis) -> Vec<usize> {
    let v = basis.isometry();
    (0..basis.full_dim())
        .map(|w| {
            (0..basis.dim())
                .find(|&c| v.get(w, c).norm_sqr() > 0.0)
                .expect("every word belongs to exactly one occupation class")
        })
        .collect()
}

/// Builds the optimal cloning channel for `spec` in symmetric coordinates.
///
/// The Kraus operators are `B_i = √(d[N]/d[M]) · V_M† (V_N ⊗ |i⟩)` with `i`
/// running over the computational basis of the appended factors; together
/// they implement "project the input joined with fresh maximally spread
/// ancillas onto the symmetric subspace, then renormalize".  Equal input and
/// output counts short-circuit to the exact identity channel.
pub fn optimal_cloner(spec: &CloneSpec, max_dim: usize) -> Result<QuantumChannel> {
    if spec.outputs() == spec.inputs() {
        return Ok(QuantumChannel::identity(spec.input_sym_dim()));
    }
    let basis_n = SymmetricBasis::build(spec.levels(), spec.inputs(), max_dim)?;
    let basis_m = SymmetricBasis::build(spec.levels(), spec.outputs(), max_dim)?;
    let appended = spec.outputs() - spec.inputs();
    let anc = product_space_dim(spec.levels(), appended)?;
    let cols_n = word_columns(&basis_n);
    let cols_m = word_columns(&basis_m);
    let factor = (basis_n.dim() as f64 / basis_m.dim() as f64).sqrt();

    let v_n = basis_n.isometry();
    let v_m = basis_m.isometry();
    let mut kraus = Vec::with_capacity(anc);
    for i in 0..anc {
        let mut b = ComplexMatrix::zeros(basis_m.dim(), basis_n.dim());
        // B_i[r, c] = factor · Σ_w V_M[w·anc + i, r] · V_N[w, c]; both
        // isometries are row-sparse, so each word contributes one entry.
        for w in 0..basis_n.full_dim() {
            let w_full = w * anc + i;
            let (c, r) = (cols_n[w], cols_m[w_full]);
            let cur = b.get(r, c);
            b.set(r, c, cur + v_m.get(w_full, r) * v_n.get(w, c) * factor);
        }
        kraus.push(b);
    }
    QuantumChannel::new(kraus)
}

/// Closed-form figures of merit of the optimal cloner, exact in rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClonerAnalytics {
    pub spec: CloneSpec,
    /// Overlap of the M-copy output with the ideal `σ^{⊗M}`: `d[N]/d[M]`.
    pub global_fidelity: Ratio<i64>,
    /// Weight of the input state in each single clone:
    /// `(N/(d+N))·((d+M)/M)`.
    pub black_cow: Ratio<i64>,
    /// Fidelity of one clone with the input:
    /// `black_cow + (1 − black_cow)/d`.
    pub single_clone_fidelity: Ratio<i64>,
}

fn ratio_i64(num: u128, den: u128) -> Result<Ratio<i64>> {
    let n = i64::try_from(num).map_err(|_| Error::Overflow("rational numerator".into()))?;
    let d = i64::try_from(den).map_err(|_| Error::Overflow("rational denominator".into()))?;
    Ok(Ratio::new(n, d))
}

/// Evaluates the closed forms for `spec`.
pub fn analytics(spec: &CloneSpec) -> Result<ClonerAnalytics> {
    let (d, n, m) = (spec.levels(), spec.inputs(), spec.outputs());
    let global_fidelity = ratio_i64(
        sym_dimension(d, n)? as u128,
        sym_dimension(d, m)? as u128,
    )?;
    let black_cow = ratio_i64((n * (d + m)) as u128, (m * (d + n)) as u128)?;
    let one = Ratio::from_integer(1);
    let single_clone_fidelity = black_cow + (one - black_cow) / Ratio::from_integer(d as i64);
    Ok(ClonerAnalytics {
        spec: *spec,
        global_fidelity,
        black_cow,
        single_clone_fidelity,
    })
}

/// Limit of the single-clone fidelity as the number of outputs grows:
/// `(N+1)/(N+d)`.
pub fn limiting_single_clone_fidelity(levels: usize, inputs: usize) -> Ratio<i64> {
    Ratio::new((inputs + 1) as i64, (inputs + levels) as i64)
}

/// One-site restriction: embeds a symmetric-coordinate operator into the
/// full product space and traces out all but the first site.  Linear; does
/// not require its argument to be a state.
pub fn one_site_restriction(
    x: &ComplexMatrix,
    levels: usize,
    particles: usize,
    max_dim: usize,
) -> Result<ComplexMatrix> {
    let basis = SymmetricBasis::build(levels, particles, max_dim)?;
    if x.rows() != basis.dim() || x.cols() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, symmetric coordinates for {particles} systems of {levels} levels have dimension {}",
            x.rows(),
            x.cols(),
            basis.dim()
        )));
    }
    let full = basis.embed(x);
    partial_trace(&full, &vec![levels; particles], &[0])
}

/// Applies the channel and reduces the output to a single clone.
pub fn single_clone_reduction(
    t: &QuantumChannel,
    spec: &CloneSpec,
    rho: &DensityMatrix,
    max_dim: usize,
) -> Result<DensityMatrix> {
    if t.dim_in() != spec.input_sym_dim() || t.dim_out() != spec.output_sym_dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel dimensions {}->{} do not match {spec}",
            t.dim_in(),
            t.dim_out()
        )));
    }
    if rho.dim() != spec.input_sym_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input state dimension {} does not match {spec}",
            rho.dim()
        )));
    }
    let out = t.apply_matrix(rho.matrix());
    DensityMatrix::new(one_site_restriction(
        &out,
        spec.levels(),
        spec.outputs(),
        max_dim,
    )?)
}

/// Estimated input-state weight in a single clone, from random pure probes.
#[derive(Clone, Copy, Debug)]
pub struct BlackCowEstimate {
    pub mean: f64,
    /// Max minus min across probes; near zero exactly when the weight is
    /// state independent.
    pub spread: f64,
    pub probes: usize,
}

/// Measures the single-clone weight `γ_φ = (⟨φ|R(T(φ^{⊗N}))|φ⟩ − 1/d)/(1 − 1/d)`
/// on `probes` Haar-random pure states and reports mean and spread.
pub fn black_cow_estimate(
    t: &QuantumChannel,
    spec: &CloneSpec,
    probes: usize,
    seed: Seed,
    max_dim: usize,
) -> Result<BlackCowEstimate> {
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe state".into()));
    }
    let d = spec.levels();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for p in 0..probes {
        let phi = random_pure_state_from(d, &mut seed.stream(p as u64));
        let coords = tensor_power_coords(&phi, spec.inputs())?;
        let input = DensityMatrix::from_pure(&coords)?;
        let clone = single_clone_reduction(t, spec, &input, max_dim)?;
        let overlap = {
            let mut acc = 0.0;
            for (i, a) in phi.iter().enumerate() {
                for (j, b) in phi.iter().enumerate() {
                    acc += (a.conj() * clone.matrix().get(i, j) * b).re;
                }
            }
            acc
        };
        let gamma = (overlap - 1.0 / d as f64) / (1.0 - 1.0 / d as f64);
        lo = lo.min(gamma);
        hi = hi.max(gamma);
        sum += gamma;
    }
    Ok(BlackCowEstimate {
        mean: sum / probes as f64,
        spread: hi - lo,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compose, covariance_defect};
    use crate::linalg::matrix::{C64, basis_vector};
    use crate::linalg::random::haar_unitary_from;
    use crate::sym::maximally_mixed_sym;
    use proptest::prelude::*;

    const CAP: usize = 4096;

    fn cloner(d: usize, n: usize, m: usize) -> QuantumChannel {
        optimal_cloner(&CloneSpec::new(d, n, m).unwrap(), CAP).unwrap()
    }

    fn rational(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn equal_counts_give_exact_identity() {
        let t = cloner(2, 1, 1);
        assert_eq!(t.kraus().len(), 1);
        assert!(t.kraus()[0].distance(&ComplexMatrix::identity(2)) == 0.0);
        let t33 = cloner(3, 2, 2);
        assert_eq!(t33.dim_in(), 6);
        assert!(t33.kraus()[0].distance(&ComplexMatrix::identity(6)) == 0.0);
    }

    #[test]
    fn qubit_doubling_of_ground_state() {
        // Occupation order (2,0), (1,1), (0,2): doubling |0⟩⟨0| gives
        // diag(2/3, 1/3, 0).
        let t = cloner(2, 1, 2);
        let input = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let out = t.apply(&input).unwrap();
        let expect = ComplexMatrix::diagonal(&[
            C64::new(2.0 / 3.0, 0.0),
            C64::new(1.0 / 3.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        assert!(out.matrix().distance(&expect) < 1e-12);
    }

    #[test]
    fn maximally_mixed_input_maps_to_maximally_mixed_output() {
        for (d, n, m) in [(2, 1, 2), (2, 2, 3), (3, 1, 2)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let t = optimal_cloner(&spec, CAP).unwrap();
            let tau_n = maximally_mixed_sym(d, n).unwrap();
            let tau_m = maximally_mixed_sym(d, m).unwrap();
            let out = t.apply(&tau_n).unwrap();
            assert!(out.distance(&tau_m) < 1e-12, "({d},{n},{m})");
        }
    }

    #[test]
    fn cloners_are_cptp() {
        for (d, n, m) in [(2, 1, 2), (2, 1, 4), (2, 3, 4), (3, 1, 3), (4, 2, 3)] {
            let t = cloner(d, n, m);
            let report = t.verify_cptp(1e-9);
            assert!(report.pass, "({d},{n},{m}): {report:?}");
        }
    }

    #[test]
    fn analytics_known_values() {
        let a = analytics(&CloneSpec::new(2, 1, 2).unwrap()).unwrap();
        assert_eq!(a.global_fidelity, rational(2, 3));
        assert_eq!(a.black_cow, rational(2, 3));
        assert_eq!(a.single_clone_fidelity, rational(5, 6));

        let b = analytics(&CloneSpec::new(2, 1, 3).unwrap()).unwrap();
        assert_eq!(b.global_fidelity, rational(1, 2));
        assert_eq!(b.black_cow, rational(5, 9));
        assert_eq!(b.single_clone_fidelity, rational(7, 9));

        let c = analytics(&CloneSpec::new(3, 1, 2).unwrap()).unwrap();
        assert_eq!(c.global_fidelity, rational(1, 2));
        assert_eq!(c.black_cow, rational(5, 8));
        assert_eq!(c.single_clone_fidelity, rational(3, 4));

        for d in 2..=4 {
            for n in 1..=3 {
                let id = analytics(&CloneSpec::new(d, n, n).unwrap()).unwrap();
                assert_eq!(id.global_fidelity, rational(1, 1));
                assert_eq!(id.black_cow, rational(1, 1));
                assert_eq!(id.single_clone_fidelity, rational(1, 1));
            }
        }
    }

    #[test]
    fn single_clone_of_identity_channel_echoes_the_state() {
        let spec = CloneSpec::new(3, 1, 1).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let phi = random_pure_state_from(3, &mut Seed(1).stream(0));
        let rho = DensityMatrix::from_pure(&phi).unwrap();
        let reduced = single_clone_reduction(&t, &spec, &rho, CAP).unwrap();
        assert!(reduced.distance(&rho) < 1e-12);
    }

    #[test]
    fn qubit_doubling_single_clone_value() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let input = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let clone = single_clone_reduction(&t, &spec, &input, CAP).unwrap();
        let expect = ComplexMatrix::diagonal(&[C64::new(5.0 / 6.0, 0.0), C64::new(1.0 / 6.0, 0.0)]);
        assert!(clone.matrix().distance(&expect) < 1e-12);
    }

    #[test]
    fn reduction_is_the_same_at_every_site() {
        let spec = CloneSpec::new(2, 1, 3).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let phi = random_pure_state_from(2, &mut Seed(2).stream(0));
        let rho = DensityMatrix::from_pure(&phi).unwrap();
        let out = t.apply(&rho).unwrap();
        let basis = SymmetricBasis::build(2, 3, CAP).unwrap();
        let full = basis.embed(out.matrix());
        let site0 = partial_trace(&full, &[2, 2, 2], &[0]).unwrap();
        for site in 1..3 {
            let other = partial_trace(&full, &[2, 2, 2], &[site]).unwrap();
            assert!(site0.distance(&other) < 1e-10);
        }
    }

    #[test]
    fn black_cow_estimates_match_closed_forms() {
        for (d, n, m) in [(2, 1, 2), (3, 1, 2), (2, 2, 3)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let t = optimal_cloner(&spec, CAP).unwrap();
            let est = black_cow_estimate(&t, &spec, 20, Seed(7), CAP).unwrap();
            let exact = analytics(&spec).unwrap().black_cow;
            let exact_f = *exact.numer() as f64 / *exact.denom() as f64;
            assert!((est.mean - exact_f).abs() < 1e-9, "({d},{n},{m}): {est:?}");
            assert!(est.spread < 1e-9, "({d},{n},{m}): {est:?}");
        }
    }

    #[test]
    fn black_cow_of_identity_is_one() {
        let spec = CloneSpec::new(2, 2, 2).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let est = black_cow_estimate(&t, &spec, 5, Seed(9), CAP).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn output_overlap_with_ideal_clones_is_state_independent() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let choi = t.choi();
        for k in 0..20 {
            let phi = random_pure_state_from(2, &mut Seed(11).stream(k));
            let p = tensor_power_coords(&phi, 1).unwrap();
            let q = tensor_power_coords(&phi, 2).unwrap();
            let rho = DensityMatrix::from_pure(&p).unwrap();
            let out = choi.apply_matrix(rho.matrix());
            let mut overlap = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    overlap += (q[i].conj() * out.get(i, j) * q[j]).re;
                }
            }
            assert!((overlap - 2.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cloning_in_stages_composes_to_direct_cloning() {
        for d in [2, 3] {
            let staged = compose(&cloner(d, 2, 3), &cloner(d, 1, 2)).unwrap();
            let direct = cloner(d, 1, 3);
            assert!(staged.choi().distance(&direct.choi()) < 1e-9, "d={d}");
        }
    }

    #[test]
    fn clone_weight_is_multiplicative_over_stages() {
        for d in 2..=4usize {
            for n in 1..=4usize {
                for m in (n + 1)..=4 {
                    for r in (m + 1)..=5 {
                        let bc = |a: usize, b: usize| {
                            analytics(&CloneSpec::new(d, a, b).unwrap()).unwrap().black_cow
                        };
                        assert_eq!(bc(n, m) * bc(m, r), bc(n, r), "d={d} {n}->{m}->{r}");
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_inputs_shrink_linearly() {
        // R(T(ρ)) = γ·R(ρ) + (1−γ)·tr(ρ)·I/d for arbitrary symmetric ρ,
        // not only tensor powers.
        let spec = CloneSpec::new(2, 2, 3).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let a = analytics(&spec).unwrap();
        let gamma = *a.black_cow.numer() as f64 / *a.black_cow.denom() as f64;
        let d = spec.levels();
        let mut rng = Seed(13).stream(0);
        for _ in 0..20 {
            let rho = crate::linalg::random::random_density_from(spec.input_sym_dim(), &mut rng);
            let lhs = one_site_restriction(
                &t.apply_matrix(&rho),
                d,
                spec.outputs(),
                CAP,
            )
            .unwrap();
            let r_in = one_site_restriction(&rho, d, spec.inputs(), CAP).unwrap();
            let rhs = r_in.scale_re(gamma).add(
                &ComplexMatrix::identity(d).scale_re((1.0 - gamma) * rho.trace().re / d as f64),
            );
            assert!(lhs.distance(&rhs) < 1e-9);
        }
    }

    #[test]
    fn cloner_commutes_with_collective_rotations() {
        for (d, n, m) in [(2, 1, 2), (2, 2, 4), (3, 1, 2)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let t = optimal_cloner(&spec, CAP).unwrap();
            for k in 0..5 {
                let u = haar_unitary_from(d, &mut Seed(17).stream(k));
                let defect = covariance_defect(&t, &spec, &u, CAP).unwrap();
                assert!(defect < 1e-9, "({d},{n},{m}) sample {k}: {defect}");
            }
        }
    }

    #[test]
    fn rotating_one_output_destroys_covariance() {
        // Following the cloner by a fixed collective rotation yields a valid
        // channel that is no longer covariant.
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let t = optimal_cloner(&spec, CAP).unwrap();
        let basis_out = SymmetricBasis::build(2, 2, CAP).unwrap();
        let fixed = haar_unitary_from(2, &mut Seed(19).stream(0));
        let rot = QuantumChannel::new(vec![basis_out.compressed_unitary(&fixed).unwrap()]).unwrap();
        let broken = compose(&rot, &t).unwrap();
        let probe = haar_unitary_from(2, &mut Seed(19).stream(1));
        let defect = covariance_defect(&broken, &spec, &probe, CAP).unwrap();
        assert!(defect > 0.01, "defect {defect}");
    }

    #[test]
    fn fidelities_decrease_in_output_count_toward_the_limit() {
        let mut prev_global = rational(2, 1); // above any fidelity
        let mut prev_single = rational(2, 1);
        for m in 1..=12 {
            let a = analytics(&CloneSpec::new(2, 1, m).unwrap()).unwrap();
            if m > 1 {
                assert!(a.global_fidelity < prev_global, "M={m}");
                assert!(a.single_clone_fidelity < prev_single, "M={m}");
            }
            prev_global = a.global_fidelity;
            prev_single = a.single_clone_fidelity;
        }
        let at_12 = analytics(&CloneSpec::new(2, 1, 12).unwrap()).unwrap();
        assert_eq!(at_12.single_clone_fidelity, rational(25, 36));
        let limit = limiting_single_clone_fidelity(2, 1);
        assert_eq!(limit, rational(2, 3));
        let gap = at_12.single_clone_fidelity - limit;
        assert!(gap > Ratio::from_integer(0) && gap <= rational(2, 12));
    }

    #[test]
    fn ground_state_input_fills_the_stretched_occupation() {
        // Cloning |0⟩^{⊗N} weights occupation (M−k, k) in a computable way;
        // spot-check the top entry for 1→3: ⟨(3,0)|T(|0⟩⟨0|)|(3,0)⟩ = 1/2.
        let t = cloner(2, 1, 3);
        let input = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let out = t.apply(&input).unwrap();
        let top = basis_vector(4, 0);
        let val = out.expectation(&crate::linalg::matrix::outer(&top, &top));
        assert!((val.re - 0.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn analytics_stay_in_the_unit_interval(
            d in 2usize..=4,
            n in 1usize..=4,
            extra in 0usize..=3,
        ) {
            let a = analytics(&CloneSpec::new(d, n, n + extra).unwrap()).unwrap();
            let zero = Ratio::from_integer(0);
            let one = Ratio::from_integer(1);
            prop_assert!(a.global_fidelity > zero && a.global_fidelity <= one);
            prop_assert!(a.black_cow > zero && a.black_cow <= one);
            prop_assert!(a.single_clone_fidelity > zero && a.single_clone_fidelity <= one);
            // A single clone is never worse than the full output.
            prop_assert!(a.single_clone_fidelity >= a.global_fidelity);
        }
    }
}
