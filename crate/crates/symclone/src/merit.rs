//! Figures of merit for cloning channels — per-state, worst-case, and
//! Haar-average clone fidelity — and a projected-gradient maximizer over
//! the CPTP set that recovers the optimal cloner numerically.

use std::collections::VecDeque;

use crate::channel::ChoiMatrix;
use crate::cloner::optimal_cloner;
use crate::error::{Error, Result};
use crate::linalg::eigh::{clip_to_psd, max_eigenvalue};
use crate::linalg::matrix::{C64, ComplexMatrix, vec_normalize};
use crate::linalg::random::{Seed, random_pure_state_from};
use crate::linalg::tensor::partial_trace;
use crate::sym::{CloneSpec, SymmetricBasis, sym_dimension, tensor_power_coords};
use crate::DEFAULT_MAX_DIM;

fn check_choi_spec(choi: &ChoiMatrix, spec: &CloneSpec) -> Result<()> {
    if choi.dim_in() != spec.input_sym_dim() || choi.dim_out() != spec.output_sym_dim() {
        return Err(Error::DimensionMismatch(format!(
            "Choi dimensions {}->{} do not match {spec}",
            choi.dim_in(),
            choi.dim_out()
        )));
    }
    Ok(())
}

/// `Re tr(a·b)` without forming the product.
fn re_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a.get(i, j) * b.get(j, i)).re;
        }
    }
    acc
}

/// Fidelity of the channel output with the ideal clones of one pure state:
/// `tr(φ^{⊗M} T(φ^{⊗N}))`, evaluated directly on the Choi matrix as the
/// quadratic form at `conj(p) ⊗ q` with `p`, `q` the tensor-power
/// coordinates of `φ`.
pub fn fidelity_at(choi: &ChoiMatrix, spec: &CloneSpec, phi: &[C64]) -> Result<f64> {
    check_choi_spec(choi, spec)?;
    if phi.len() != spec.levels() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes, expected {}",
            phi.len(),
            spec.levels()
        )));
    }
    let p = tensor_power_coords(phi, spec.inputs())?;
    let q = tensor_power_coords(phi, spec.outputs())?;
    let dout = spec.output_sym_dim();
    let w: Vec<C64> = p
        .iter()
        .flat_map(|a| q.iter().map(move |b| a.conj() * b))
        .collect();
    let m = choi.matrix();
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            acc += (wi.conj() * m.get(i, j) * wj).re;
        }
    }
    debug_assert_eq!(w.len(), spec.input_sym_dim() * dout);
    Ok(acc)
}

/// The Hermitian operator `Ω̃` on symmetric-input ⊗ symmetric-output
/// coordinates whose pairing `tr(C Ω̃)` with any Choi matrix equals the
/// Haar average of [`fidelity_at`] over pure states.
///
/// Derivation sketch: the average couples input and output through the
/// symmetrizer on all N+M systems; transposing the input factors and
/// compressing both sides with the symmetric isometries gives, using that
/// the isometries are real,
/// `Ω̃[(a,b),(a',b')] = (1/d[N+M]) Σ_r G[r,(a',b)] · G[r,(a,b')]` with
/// `G = V_{N+M}ᵀ (V_N ⊗ V_M)`.  `G` is assembled in one pass over the
/// product basis words, so the full-space symmetrizer is never formed.
pub fn average_fidelity_operator(spec: &CloneSpec, max_dim: usize) -> Result<ComplexMatrix> {
    let d = spec.levels();
    let (n, m) = (spec.inputs(), spec.outputs());
    let basis_n = SymmetricBasis::build(d, n, max_dim)?;
    let basis_m = SymmetricBasis::build(d, m, max_dim)?;
    let basis_nm = SymmetricBasis::build(d, n + m, max_dim)?;
    let (dn, dm, dnm) = (basis_n.dim(), basis_m.dim(), basis_nm.dim());

    // G[r, (a,b)] = Σ_{x,y} V_{N+M}[(x,y), r] · V_N[x,a] · V_M[y,b]; every
    // word (x,y) hits exactly one (r, a, b) triple.
    let mut g = vec![0.0f64; dnm * dn * dm];
    let (vn, vm, vnm) = (basis_n.isometry(), basis_m.isometry(), basis_nm.isometry());
    for x in 0..basis_n.full_dim() {
        let a = (0..dn)
            .find(|&c| vn.get(x, c).re != 0.0)
            .expect("word has an occupation class");
        let wa = vn.get(x, a).re;
        for y in 0..basis_m.full_dim() {
            let b = (0..dm)
                .find(|&c| vm.get(y, c).re != 0.0)
                .expect("word has an occupation class");
            let word = x * basis_m.full_dim() + y;
            let r = (0..dnm)
                .find(|&c| vnm.get(word, c).re != 0.0)
                .expect("word has an occupation class");
            g[r * dn * dm + a * dm + b] += vnm.get(word, r).re * wa * vm.get(y, b).re;
        }
    }

    let side = dn * dm;
    let scale = 1.0 / dnm as f64;
    let omega = ComplexMatrix::from_fn(side, side, |row, col| {
        let (a, b) = (row / dm, row % dm);
        let (a2, b2) = (col / dm, col % dm);
        let mut acc = 0.0;
        for r in 0..dnm {
            acc += g[r * dn * dm + a2 * dm + b] * g[r * dn * dm + a * dm + b2];
        }
        C64::new(acc * scale, 0.0)
    });
    Ok(omega.hermitize())
}

/// Haar-average clone fidelity of a channel: `tr(C Ω̃)`.
pub fn average_fidelity(choi: &ChoiMatrix, omega: &ComplexMatrix) -> f64 {
    re_trace_product(choi.matrix(), omega)
}

/// Worst-case fidelity search outcome.
#[derive(Clone, Debug)]
pub struct MeritReport {
    pub worst_fidelity: f64,
    /// The pure state achieving the reported worst fidelity.
    pub argmin_state: Vec<C64>,
    /// Exact Haar average `tr(C Ω̃)`.
    pub average_fidelity: f64,
    /// Total fidelity evaluations spent (random starts plus refinement).
    pub probes_used: usize,
}

/// Projected descent on the unit sphere from one start state; returns the
/// refined state, its fidelity, and the number of fidelity evaluations.
fn refine_minimum(
    choi: &ChoiMatrix,
    spec: &CloneSpec,
    start: &[C64],
    start_value: f64,
) -> Result<(Vec<C64>, f64, usize)> {
    let d = spec.levels();
    let h = 1e-5;
    let mut x = start.to_vec();
    let mut value = start_value;
    let mut evals = 0usize;
    let mut step = 0.1;
    let mut stall = 0usize;
    // Finite-difference descent with multiplicative step adaptation: the
    // step keeps growing while downhill moves succeed, which is what makes
    // flat minima (e.g. |φ_k|^{2M} landscapes) reachable.
    for _ in 0..10_000 {
        if stall >= 20 || step < 1e-14 {
            break;
        }
        let mut grad = vec![C64::new(0.0, 0.0); d];
        for k in 0..d {
            for (re_part, unit) in [(true, C64::new(1.0, 0.0)), (false, C64::new(0.0, 1.0))] {
                let mut plus = x.clone();
                plus[k] += unit * h;
                let mut minus = x.clone();
                minus[k] -= unit * h;
                let fp = fidelity_at(choi, spec, &vec_normalize(&plus))?;
                let fm = fidelity_at(choi, spec, &vec_normalize(&minus))?;
                evals += 2;
                let slope = (fp - fm) / (2.0 * h);
                if re_part {
                    grad[k].re = slope;
                } else {
                    grad[k].im = slope;
                }
            }
        }
        let candidate: Vec<C64> = x
            .iter()
            .zip(grad.iter())
            .map(|(xi, gi)| xi - gi * step)
            .collect();
        let candidate = vec_normalize(&candidate);
        let cand_value = fidelity_at(choi, spec, &candidate)?;
        evals += 1;
        if cand_value < value {
            if value - cand_value < 1e-9 {
                stall += 1;
            } else {
                stall = 0;
            }
            x = candidate;
            value = cand_value;
            step *= 2.0;
        } else {
            step *= 0.5;
            stall += 1;
        }
    }
    Ok((x, value, evals))
}

/// Worst-case clone fidelity: coarse random search over `starts` pure
/// states, then projected sphere descent from the worst few candidates.
/// The exact Haar-average fidelity is reported alongside.
pub fn worst_case_fidelity(
    choi: &ChoiMatrix,
    spec: &CloneSpec,
    starts: usize,
    seed: Seed,
    max_dim: usize,
) -> Result<MeritReport> {
    if starts == 0 {
        return Err(Error::InvalidArgument("need at least one start state".into()));
    }
    check_choi_spec(choi, spec)?;
    let d = spec.levels();
    let mut candidates: Vec<(f64, Vec<C64>)> = Vec::with_capacity(starts);
    for k in 0..starts {
        let phi = random_pure_state_from(d, &mut seed.stream(k as u64));
        let value = fidelity_at(choi, spec, &phi)?;
        candidates.push((value, phi));
    }
    let mut probes_used = starts;
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("fidelities are finite"));

    let mut worst_fidelity = candidates[0].0;
    let mut argmin_state = candidates[0].1.clone();
    for (value, phi) in candidates.iter().take(3) {
        let (refined, refined_value, evals) = refine_minimum(choi, spec, phi, *value)?;
        probes_used += evals;
        if refined_value < worst_fidelity {
            worst_fidelity = refined_value;
            argmin_state = refined;
        }
    }

    let omega = average_fidelity_operator(spec, max_dim)?;
    Ok(MeritReport {
        worst_fidelity,
        argmin_state,
        average_fidelity: average_fidelity(choi, &omega),
        probes_used,
    })
}

/// Settings for [`optimize_channel`].
#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Gradient step; `None` means `1/λ_max(Ω̃)`.
    pub step: Option<f64>,
    /// Convergence: objective spread over the trailing 51 iterates.
    pub tol: f64,
    /// Starting Choi matrix; `None` means the neutral `I_in ⊗ I_out/d[M]`.
    pub init: Option<ChoiMatrix>,
    pub seed: Seed,
    pub max_dim: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            max_iters: 2000,
            step: None,
            tol: 1e-9,
            init: None,
            seed: Seed(0),
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Outcome of the projected-gradient ascent.
#[derive(Clone, Debug)]
pub struct OptimizeResult {
    /// Final Haar-average fidelity `tr(C Ω̃)`.
    pub best_value: f64,
    pub iterations: usize,
    pub choi: ChoiMatrix,
    /// `|best_value − d[N]/d[M]|`.
    pub gap_to_closed_form: f64,
    /// Frobenius distance of the final Choi to the optimal cloner's.
    pub choi_distance_to_optimal: f64,
    pub converged: bool,
    /// Distance between the PSD and trace-preserving projections at the
    /// last Dykstra round — the infeasibility of the returned iterate.
    pub final_dykstra_residual: f64,
    /// Objective value after every iteration.
    pub objective_trace: Vec<f64>,
    /// Dykstra residual after every iteration; entries at roundoff scale
    /// mark the iterates that are genuinely inside the CPTP set.
    pub residual_trace: Vec<f64>,
}

const DYKSTRA_ROUNDS: usize = 50;
const POLISH_ROUNDS: usize = 500;

/// Affine projection onto trace preservation:
/// `C + ((I − tr_out C)/d_out) ⊗ I_out`.
fn project_tp(c: &ComplexMatrix, din: usize, dout: usize) -> ComplexMatrix {
    let deficit = ComplexMatrix::identity(din)
        .sub(&partial_trace(c, &[din, dout], &[0]).expect("shape fixed by caller"))
        .scale_re(1.0 / dout as f64);
    c.add(
        &deficit
            .kron(&ComplexMatrix::identity(dout))
            .expect("projection stays within the Choi dimensions"),
    )
}

/// Dykstra alternation between the PSD cone and the trace-preservation
/// affine space.  Returns the trace-preserving iterate and the final
/// distance between the two projections.
fn dykstra_project(raw: &ComplexMatrix, din: usize, dout: usize) -> Result<(ComplexMatrix, f64)> {
    let mut x = raw.clone();
    let side = raw.rows();
    let mut p = ComplexMatrix::zeros(side, side);
    let mut q = ComplexMatrix::zeros(side, side);
    let mut residual = f64::INFINITY;
    for _ in 0..DYKSTRA_ROUNDS {
        let y = clip_to_psd(&x.add(&p).hermitize())?;
        p = x.add(&p).sub(&y);
        let x_next = project_tp(&y.add(&q), din, dout);
        q = y.add(&q).sub(&x_next);
        let step = x_next.distance(&x);
        x = x_next;
        residual = y.distance(&x);
        if step < 1e-14 && residual < 1e-12 {
            break;
        }
    }
    Ok((x.hermitize(), residual))
}

/// Maximizes the Haar-average clone fidelity `tr(C Ω̃)` over the CPTP set
/// by projected gradient ascent, and compares the result against the
/// closed form and the constructed optimal cloner.
pub fn optimize_channel(spec: &CloneSpec, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    let (din, dout) = (spec.input_sym_dim(), spec.output_sym_dim());
    let omega = average_fidelity_operator(spec, opts.max_dim)?;
    let lam_max = max_eigenvalue(&omega)?;
    let eta = match opts.step {
        Some(step) if step > 0.0 => step,
        Some(step) => {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        None => 1.0 / lam_max,
    };

    let mut current = match &opts.init {
        Some(choi) => {
            check_choi_spec(choi, spec)?;
            choi.matrix().clone()
        }
        None => ComplexMatrix::identity(din)
            .kron(&ComplexMatrix::identity(dout))?
            .scale_re(1.0 / dout as f64),
    };

    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut window = VecDeque::with_capacity(52);
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let scaled_omega = omega.scale_re(eta);
    for iter in 1..=opts.max_iters {
        iterations = iter;
        let stepped = current.add(&scaled_omega);
        let (projected, res) = dykstra_project(&stepped, din, dout)?;
        current = projected;
        residual = res;
        residual_trace.push(res);
        let objective = re_trace_product(&current, &omega);
        objective_trace.push(objective);
        window.push_back(objective);
        if window.len() > 51 {
            window.pop_front();
        }
        if window.len() == 51 {
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < opts.tol {
                converged = true;
                break;
            }
        }
    }

    // The last gradient step can leave the iterate slightly outside the
    // CPTP set when the truncated Dykstra alternation stalls on an active
    // cone face.  Alternate plain projections (no step) until the returned
    // Choi is feasible to roundoff, then report the objective it attains.
    for _ in 0..POLISH_ROUNDS {
        if residual <= 1e-12 {
            break;
        }
        let y = clip_to_psd(&current.hermitize())?;
        let next = project_tp(&y, din, dout);
        residual = next.distance(&y);
        current = next;
    }
    let best_value = re_trace_product(&current, &omega);
    let closed_form =
        sym_dimension(spec.levels(), spec.inputs())? as f64 / sym_dimension(spec.levels(), spec.outputs())? as f64;
    let optimal = optimal_cloner(spec, opts.max_dim)?.choi();
    let choi = ChoiMatrix::new(current, din, dout)?;
    Ok(OptimizeResult {
        best_value,
        iterations,
        gap_to_closed_form: (best_value - closed_form).abs(),
        choi_distance_to_optimal: choi.distance(&optimal),
        choi,
        converged,
        final_dykstra_residual: residual,
        objective_trace,
        residual_trace,
    })
}

/// Evidence for the uniqueness of the optimum: restart the ascent from the
/// optimal cloner contaminated with a random CPTP channel at the given
/// mixing weight, and report where it lands.
#[derive(Clone, Debug)]
pub struct UniquenessProbe {
    /// Final Frobenius distance to the optimal cloner's Choi matrix.
    pub choi_distance: f64,
    /// Final objective value.
    pub best_value: f64,
}

pub fn uniqueness_probe(
    spec: &CloneSpec,
    perturbation_scale: f64,
    seed: Seed,
    max_dim: usize,
) -> Result<UniquenessProbe> {
    if !(0.0..=1.0).contains(&perturbation_scale) {
        return Err(Error::InvalidArgument(format!(
            "perturbation scale must lie in [0, 1], got {perturbation_scale}"
        )));
    }
    let (din, dout) = (spec.input_sym_dim(), spec.output_sym_dim());
    let base = optimal_cloner(spec, max_dim)?.choi();
    let init = if perturbation_scale == 0.0 {
        base.clone()
    } else {
        let noise =
            crate::channel::random_cptp_channel(din, dout, din * dout, &mut seed.rng())?.choi();
        ChoiMatrix::new(
            base.matrix()
                .scale_re(1.0 - perturbation_scale)
                .add(&noise.matrix().scale_re(perturbation_scale)),
            din,
            dout,
        )?
    };
    let opts = OptimizeOptions {
        init: Some(init),
        seed,
        max_dim,
        ..OptimizeOptions::default()
    };
    let result = optimize_channel(spec, &opts)?;
    Ok(UniquenessProbe {
        choi_distance: result.choi_distance_to_optimal,
        best_value: result.best_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{QuantumChannel, random_cptp_channel, twirl_mc};
    use crate::linalg::eigh::min_eigenvalue;
    use crate::linalg::tensor::partial_transpose;
    use crate::linalg::matrix::basis_vector;
    use crate::sym::maximally_mixed_sym;
    use crate::state::DensityMatrix;

    const CAP: usize = 4096;

    fn cloner_choi(d: usize, n: usize, m: usize) -> ChoiMatrix {
        optimal_cloner(&CloneSpec::new(d, n, m).unwrap(), CAP)
            .unwrap()
            .choi()
    }

    #[test]
    fn identity_channel_has_unit_fidelity_everywhere() {
        let spec = CloneSpec::new(2, 1, 1).unwrap();
        let choi = cloner_choi(2, 1, 1);
        for k in 0..5 {
            let phi = random_pure_state_from(2, &mut Seed(1).stream(k));
            let f = fidelity_at(&choi, &spec, &phi).unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_cloner_fidelity_is_the_closed_form_at_every_state() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let choi = cloner_choi(2, 1, 2);
        for k in 0..20 {
            let phi = random_pure_state_from(2, &mut Seed(2).stream(k));
            let f = fidelity_at(&choi, &spec, &phi).unwrap();
            assert!((f - 2.0 / 3.0).abs() < 1e-10, "sample {k}: {f}");
        }
    }

    #[test]
    fn replacement_with_maximally_mixed_scores_one_third() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let tau = maximally_mixed_sym(2, 2).unwrap();
        let ch = QuantumChannel::replace_with_state(2, &tau).unwrap();
        let choi = ch.choi();
        for k in 0..5 {
            let phi = random_pure_state_from(2, &mut Seed(3).stream(k));
            let f = fidelity_at(&choi, &spec, &phi).unwrap();
            assert!((f - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    /// Literal construction of the average-fidelity operator through the
    /// full product space: transpose the input factors of the normalized
    /// symmetrizer on N+M systems, then compress.
    fn omega_by_embedding(spec: &CloneSpec) -> ComplexMatrix {
        let d = spec.levels();
        let (n, m) = (spec.inputs(), spec.outputs());
        let basis_n = SymmetricBasis::build(d, n, CAP).unwrap();
        let basis_m = SymmetricBasis::build(d, m, CAP).unwrap();
        let basis_nm = SymmetricBasis::build(d, n + m, CAP).unwrap();
        let s = basis_nm
            .symmetrizer()
            .scale_re(1.0 / basis_nm.dim() as f64);
        let transposed =
            partial_transpose(&s, &vec![d; n + m], &(0..n).collect::<Vec<_>>()).unwrap();
        let joint = basis_n.isometry().kron(basis_m.isometry()).unwrap();
        joint.adjoint().mul(&transposed).mul(&joint)
    }

    #[test]
    fn average_operator_matches_literal_embedding() {
        for (d, n, m) in [(2, 1, 1), (2, 1, 2), (2, 2, 3), (3, 1, 2)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let fast = average_fidelity_operator(&spec, CAP).unwrap();
            let literal = omega_by_embedding(&spec);
            assert!(
                fast.distance(&literal) < 1e-12,
                "({d},{n},{m}): {:.3e}",
                fast.distance(&literal)
            );
        }
    }

    #[test]
    fn average_fidelity_of_reference_channels() {
        let id_spec = CloneSpec::new(2, 1, 1).unwrap();
        let omega = average_fidelity_operator(&id_spec, CAP).unwrap();
        let id_choi = cloner_choi(2, 1, 1);
        assert!((average_fidelity(&id_choi, &omega) - 1.0).abs() < 1e-10);

        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let omega = average_fidelity_operator(&spec, CAP).unwrap();
        let choi = cloner_choi(2, 1, 2);
        assert!((average_fidelity(&choi, &omega) - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn average_operator_agrees_with_monte_carlo() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let omega = average_fidelity_operator(&spec, CAP).unwrap();
        let mut rng = Seed(5).stream(0);
        for trial in 0..5 {
            let ch = random_cptp_channel(2, 3, 3, &mut rng).unwrap();
            let choi = ch.choi();
            let exact = average_fidelity(&choi, &omega);
            let samples = 100_000;
            let mut mean = 0.0;
            for k in 0..samples {
                let phi = random_pure_state_from(2, &mut Seed(600 + trial).stream(k));
                mean += fidelity_at(&choi, &spec, &phi).unwrap();
            }
            mean /= samples as f64;
            assert!((mean - exact).abs() < 0.003, "trial {trial}: {mean} vs {exact}");
        }
    }

    #[test]
    fn worst_case_of_optimal_cloners_equals_the_average() {
        for (d, n, m) in [(2, 1, 2), (3, 1, 2), (2, 2, 3)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let choi = cloner_choi(d, n, m);
            let report = worst_case_fidelity(&choi, &spec, 20, Seed(7), CAP).unwrap();
            let expect = sym_dimension(d, n).unwrap() as f64 / sym_dimension(d, m).unwrap() as f64;
            assert!((report.worst_fidelity - expect).abs() < 1e-8, "({d},{n},{m}): {report:?}");
            assert!((report.average_fidelity - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn measure_and_reprepare_has_a_fidelity_zero() {
        // The channel that discards its input and emits the doubled ground
        // state has fidelity |φ_0|⁴ — zero at any orthogonal input.  The
        // descent must actually find that zero.
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let target = DensityMatrix::from_pure(&basis_vector(3, 0)).unwrap();
        let ch = QuantumChannel::replace_with_state(2, &target).unwrap();
        let report = worst_case_fidelity(&ch.choi(), &spec, 20, Seed(9), CAP).unwrap();
        assert!(report.worst_fidelity < 1e-8, "{report:?}");
        assert!(report.argmin_state[0].norm() <= 1e-4, "{report:?}");
        assert!(report.worst_fidelity <= report.average_fidelity);
    }

    #[test]
    fn worst_never_exceeds_average_on_random_channels() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let mut rng = Seed(11).stream(0);
        for trial in 0..20 {
            let ch = random_cptp_channel(2, 3, 1 + trial % 4, &mut rng).unwrap();
            let report = worst_case_fidelity(&ch.choi(), &spec, 10, Seed(12), CAP).unwrap();
            assert!(
                report.worst_fidelity <= report.average_fidelity + 1e-9,
                "trial {trial}: {report:?}"
            );
            assert!(report.average_fidelity <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn optimizer_recovers_the_identity_channel() {
        let spec = CloneSpec::new(2, 1, 1).unwrap();
        let result = optimize_channel(&spec, &OptimizeOptions::default()).unwrap();
        assert!(result.converged, "{result:?}");
        assert!((result.best_value - 1.0).abs() < 1e-6);
        assert!(result.choi_distance_to_optimal < 1e-6, "{result:?}");
    }

    #[test]
    fn optimizer_reaches_the_closed_form_from_the_neutral_start() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let result = optimize_channel(&spec, &OptimizeOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.gap_to_closed_form < 1e-3, "{:?}", result.gap_to_closed_form);
        assert!(result.choi_distance_to_optimal < 1e-2);
        assert!(result.final_dykstra_residual < 1e-8);
        // The iterates never beat the provable optimum.
        for &v in &result.objective_trace {
            assert!(v <= 2.0 / 3.0 + 1e-3);
        }
    }

    #[test]
    fn objective_is_bounded_and_monotone_once_feasible() {
        // The trace bound tr(CΩ̃) ≤ d[N]·λ_max and the ascent guarantee both
        // assume C is inside the CPTP set, so gate on the Dykstra residual:
        // iterates may sit slightly outside after 50 rounds.  This spec's
        // whole trajectory stays feasible, which keeps the gate meaningful.
        let spec = CloneSpec::new(2, 1, 3).unwrap();
        let omega = average_fidelity_operator(&spec, CAP).unwrap();
        let bound = spec.input_sym_dim() as f64 * max_eigenvalue(&omega).unwrap();
        let result = optimize_channel(&spec, &OptimizeOptions::default()).unwrap();
        let feasible = |k: usize| result.residual_trace[k] <= 1e-9;
        let mut checked = 0;
        for (k, &v) in result.objective_trace.iter().enumerate() {
            if !feasible(k) {
                continue;
            }
            assert!(v <= bound + 1e-8, "iterate {k}: {v} vs bound {bound}");
            if k > 0 && feasible(k - 1) {
                assert!(
                    v >= result.objective_trace[k - 1] - 1e-10,
                    "objective dipped at iterate {k}"
                );
            }
            checked += 1;
        }
        assert!(checked > 50, "only {checked} feasible iterates");
        assert!(result.gap_to_closed_form < 1e-3);
    }

    #[test]
    fn returned_choi_is_feasible_even_when_the_ascent_stalls_outside() {
        // (3,1,2) and (2,2,3) plateau with per-iteration Dykstra residuals
        // near 1e-4: the fixed step keeps pushing the iterate off the CPTP
        // set faster than 50 rounds can pull it back.  The finishing pass
        // must still hand back a feasible Choi at the reported objective.
        for (d, n, m) in [(3, 1, 2), (2, 2, 3)] {
            let spec = CloneSpec::new(d, n, m).unwrap();
            let result = optimize_channel(&spec, &OptimizeOptions::default()).unwrap();
            assert!(
                result.final_dykstra_residual <= 1e-10,
                "({d},{n},{m}): residual {}",
                result.final_dykstra_residual
            );
            assert!(min_eigenvalue(result.choi.matrix()).unwrap() >= -1e-8);
            assert!(result.choi.tp_defect() <= 1e-8);
            assert!(
                (result.best_value - re_trace_product(result.choi.matrix(), &average_fidelity_operator(&spec, CAP).unwrap())).abs()
                    < 1e-12,
                "reported value must match the returned Choi"
            );
            assert!(result.gap_to_closed_form < 1e-3, "({d},{n},{m}): gap {}", result.gap_to_closed_form);
        }
    }

    #[test]
    fn non_convergence_is_reported_not_hidden() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let opts = OptimizeOptions {
            max_iters: 1,
            ..OptimizeOptions::default()
        };
        let result = optimize_channel(&spec, &opts).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 1);
        assert_eq!(result.objective_trace.len(), 1);
    }

    #[test]
    fn uniqueness_probe_is_a_fixed_point_at_zero_scale() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let probe = uniqueness_probe(&spec, 0.0, Seed(13), CAP).unwrap();
        assert!(probe.choi_distance < 1e-6, "{probe:?}");
        assert!((probe.best_value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn perturbed_restarts_fall_back_to_the_optimum() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        for seed in [0, 1] {
            let probe = uniqueness_probe(&spec, 0.5, Seed(seed), CAP).unwrap();
            assert!(probe.choi_distance <= 1e-2, "seed {seed}: {probe:?}");
        }
        let spec23 = CloneSpec::new(2, 2, 3).unwrap();
        let probe = uniqueness_probe(&spec23, 0.5, Seed(2), CAP).unwrap();
        assert!((probe.best_value - 0.75).abs() < 1e-3, "{probe:?}");
    }

    #[test]
    fn twirling_cannot_lower_the_worst_case() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let mut rng = Seed(15).stream(0);
        let ch = random_cptp_channel(2, 3, 2, &mut rng).unwrap();
        let samples = 2000;
        let twirled = twirl_mc(&ch, &spec, samples, Seed(16), CAP).unwrap();
        let raw = worst_case_fidelity(&ch.choi(), &spec, 15, Seed(17), CAP).unwrap();
        let averaged = worst_case_fidelity(&twirled, &spec, 15, Seed(18), CAP).unwrap();
        let slack = 5.0 / (samples as f64).sqrt();
        assert!(
            raw.worst_fidelity <= averaged.worst_fidelity + slack,
            "raw {raw:?} vs twirled {averaged:?}"
        );
    }

    #[test]
    fn argument_validation() {
        let spec = CloneSpec::new(2, 1, 2).unwrap();
        let choi = cloner_choi(2, 1, 2);
        // Wrong spec for this Choi.
        let wrong = CloneSpec::new(2, 1, 3).unwrap();
        assert!(fidelity_at(&choi, &wrong, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).is_err());
        // Wrong state length.
        assert!(fidelity_at(&choi, &spec, &[C64::new(1.0, 0.0)]).is_err());
        // Unnormalized state.
        assert!(fidelity_at(&choi, &spec, &[C64::new(2.0, 0.0), C64::new(0.0, 0.0)]).is_err());
        assert!(worst_case_fidelity(&choi, &spec, 0, Seed(0), CAP).is_err());
        assert!(uniqueness_probe(&spec, 1.5, Seed(0), CAP).is_err());
        let bad_step = OptimizeOptions {
            step: Some(-1.0),
            ..OptimizeOptions::default()
        };
        assert!(optimize_channel(&spec, &bad_step).is_err());
    }
}
