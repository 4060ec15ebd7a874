//! Covariant ("free") channels: generation, verification, application and
//! monotonicity checks.
//!
//! A channel commutes with every `T_x(ρ) = e^{−ixA} ρ e^{ixA}` exactly when
//! it has Kraus operators each confined to a single mode `δ`, i.e. supported
//! on eigen-index pairs `(i, j)` with `a_i − a_j = δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};
use crate::measures::{derive_seed, evaluate, EvalOptions, MeasureId};
use crate::modes::{delta_coherence_norm, gap_set, GapSet};
use crate::state::{
    phase_conjugate_matrix, random_density, random_pure_state, DensityMatrix, HermitianObservable, PureState,
};

/// Outcomes with probability below this are dropped from selective application.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-14;

/// Kraus operators (computational basis) with their mode labels.
#[derive(Debug, Clone)]
pub struct FreeChannel {
    kraus_ops: Vec<ComplexMatrix>,
    mode_labels: Vec<f64>,
    trace_preserving: bool,
}

impl FreeChannel {
    /// Checks `Σ K†K ≤ I` (within `1e-9`) and records whether equality holds.
    pub fn new(kraus_ops: Vec<ComplexMatrix>, mode_labels: Vec<f64>) -> Result<Self> {
        if kraus_ops.is_empty() || kraus_ops.len() != mode_labels.len() {
            return Err(Error::InvalidParameter("need one mode label per Kraus operator, and at least one".into()));
        }
        let d = linalg::check_square(&kraus_ops[0])?;
        for k in &kraus_ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            linalg::check_finite(k)?;
        }
        let s = completeness(&kraus_ops);
        let top = linalg::eigh(&s).values[0];
        if top > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!("Σ K†K exceeds the identity (largest eigenvalue {top})")));
        }
        let trace_preserving = (s - linalg::identity(d)).camax() <= 1e-9;
        Ok(FreeChannel { kraus_ops, mode_labels, trace_preserving })
    }

    pub fn identity(dim: usize) -> Self {
        FreeChannel { kraus_ops: vec![linalg::identity(dim)], mode_labels: vec![0.0], trace_preserving: true }
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    pub fn mode_labels(&self) -> &[f64] {
        &self.mode_labels
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn dim(&self) -> usize {
        self.kraus_ops[0].nrows()
    }

    /// `max |Σ K†K − I|` entrywise.
    pub fn completeness_defect(&self) -> f64 {
        (completeness(&self.kraus_ops) - linalg::identity(self.dim())).camax()
    }
}

fn completeness(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let d = kraus[0].nrows();
    kraus.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
}

/// Draws a random free channel.
///
/// Kraus operator `α` gets complex Gaussian entries on the eigen-index pairs
/// of mode `mode_choices[α mod len]`. All are rescaled so that `Σ K†K ≤ scale·I`,
/// then completed by `K₀ = (I − Σ K†K)^{1/2}`, which lies in mode 0 because
/// `Σ K†K` is block diagonal over the eigenspaces of `A`.
pub fn random_free_channel(
    a: &HermitianObservable,
    mode_choices: &[f64],
    n_kraus: usize,
    scale: f64,
    seed: u64,
) -> Result<FreeChannel> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidParameter(format!("scale must lie in (0, 1], got {scale}")));
    }
    let d = a.dim();
    if n_kraus == 0 {
        return Ok(FreeChannel::identity(d));
    }
    if mode_choices.is_empty() {
        return Err(Error::InvalidParameter("no modes to draw Kraus operators from".into()));
    }
    let gaps = gap_set(a, None)?;
    let indices: Vec<usize> = mode_choices.iter().map(|&delta| gaps.index_of(delta)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kraus = Vec::with_capacity(n_kraus + 1);
    let mut labels = Vec::with_capacity(n_kraus + 1);
    for alpha in 0..n_kraus {
        let g = indices[alpha % indices.len()];
        let raw = linalg::gaussian_matrix(&mut rng, d, d);
        kraus.push(gaps.filter(&raw, g));
        labels.push(gaps.gaps()[g]);
    }
    let s = completeness(&kraus);
    let top = linalg::eigh(&s).values[0];
    if top > 0.0 {
        let factor = (scale / top).sqrt();
        kraus.iter_mut().for_each(|k| *k *= num_complex::Complex64::new(factor, 0.0));
    }
    let rest = linalg::hermitian_part(&(linalg::identity(d) - completeness(&kraus)));
    let root = linalg::eigh(&rest).map(|v| v.max(0.0).sqrt());
    let zero = gaps.zero_index();
    kraus.push(gaps.filter(&root, zero));
    labels.push(0.0);
    let kraus = kraus.into_iter().map(|k| a.from_eigenbasis(&k)).collect();
    FreeChannel::new(kraus, labels)
}

/// `tr_anc(X) ⊗ |φ⟩⟨φ|` on a system ⊗ ancilla space: discard the ancilla and
/// prepare it afresh. Each Kraus operator `I ⊗ |φ⟩⟨k|` commutes with `A ⊗ I`.
pub fn ancilla_replacement_channel(system_dim: usize, fresh: &PureState) -> FreeChannel {
    let anc = fresh.dim();
    let id = linalg::identity(system_dim);
    let kraus = (0..anc)
        .map(|k| {
            let mut outer = ComplexMatrix::zeros(anc, anc);
            for r in 0..anc {
                outer[(r, k)] = fresh.amplitudes()[r];
            }
            linalg::kron(&id, &outer)
        })
        .collect();
    FreeChannel { kraus_ops: kraus, mode_labels: vec![0.0; anc], trace_preserving: true }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportViolation {
    pub kraus_index: usize,
    /// Eigen-index pair of `A`.
    pub pair: (usize, usize),
    pub pair_gap: f64,
    pub label: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceVerdict {
    pub passed: bool,
    pub support_violations: Vec<SupportViolation>,
    /// Largest `‖E(T_x ρ) − T_x E(ρ)‖₁` over the sampled `x` and `ρ`.
    pub max_residual: f64,
}

/// Checks Kraus block support against the gap set and the covariance
/// residual on `n_phase_samples` random `(x, ρ)`, with tolerance `1e-9`.
pub fn verify_covariance(
    channel: &FreeChannel,
    a: &HermitianObservable,
    n_phase_samples: usize,
    seed: u64,
) -> Result<CovarianceVerdict> {
    if channel.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: channel.dim() });
    }
    let gaps = gap_set(a, None)?;
    let mut support_violations = Vec::new();
    for (idx, (k, &label)) in channel.kraus_ops.iter().zip(&channel.mode_labels).enumerate() {
        let inner = a.to_eigenbasis(k);
        let wanted = gaps.index_of(label).ok();
        support_violations.extend(block_violations(&inner, &gaps, wanted, idx, label));
    }
    let d = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    for s in 0..n_phase_samples {
        let x = rng.random_range(0.0..std::f64::consts::TAU);
        let rho = random_density(d, d, derive_seed(seed, s as u64))?;
        let lhs = apply_channel(channel, &phase_conjugate_matrix(rho.matrix(), a, x)?)?;
        let rhs = phase_conjugate_matrix(&apply_channel(channel, rho.matrix())?, a, x)?;
        max_residual = max_residual.max(linalg::trace_norm(&(lhs - rhs)));
    }
    Ok(CovarianceVerdict {
        passed: support_violations.is_empty() && max_residual <= 1e-9,
        support_violations,
        max_residual,
    })
}

fn block_violations(
    inner: &ComplexMatrix,
    gaps: &GapSet,
    wanted: Option<usize>,
    idx: usize,
    label: f64,
) -> Vec<SupportViolation> {
    let scale = inner.camax().max(1.0);
    let n = gaps.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let magnitude = inner[(i, j)].norm();
            let g = gaps.pair_gap(i, j);
            if magnitude > 1e-12 * scale && Some(g) != wanted {
                out.push(SupportViolation {
                    kraus_index: idx,
                    pair: (i, j),
                    pair_gap: gaps.gaps()[g],
                    label,
                    magnitude,
                });
            }
        }
    }
    out
}

/// `Σ_α K_α X K_α†`.
pub fn apply_channel(channel: &FreeChannel, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.nrows() != channel.dim() || x.ncols() != channel.dim() {
        return Err(Error::DimensionMismatch { expected: channel.dim(), found: x.nrows() });
    }
    let d = channel.dim();
    Ok(channel.kraus_ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k * x * k.adjoint()))
}

/// Deterministic output of a trace-preserving channel as a state.
pub fn apply_to_state(channel: &FreeChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !channel.trace_preserving {
        return Err(Error::InvalidParameter(
            "deterministic output is a state only for trace-preserving channels".into(),
        ));
    }
    DensityMatrix::from_matrix(linalg::hermitian_part(&apply_channel(channel, rho.matrix())?))
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub kraus_index: usize,
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Per-Kraus outcomes `σ_α = K_α ρ K_α† / p_α`, dropping `p_α < 1e-14`.
pub fn apply_selective(channel: &FreeChannel, rho: &DensityMatrix) -> Result<Vec<Outcome>> {
    if rho.dim() != channel.dim() {
        return Err(Error::DimensionMismatch { expected: channel.dim(), found: rho.dim() });
    }
    let mut out = Vec::new();
    for (kraus_index, k) in channel.kraus_ops.iter().enumerate() {
        let m = linalg::hermitian_part(&(k * rho.matrix() * k.adjoint()));
        let probability = linalg::trace(&m).re;
        if probability < MIN_OUTCOME_PROBABILITY {
            continue;
        }
        let state = DensityMatrix::from_matrix(m.unscale(probability))?;
        out.push(Outcome { kraus_index, probability, state });
    }
    Ok(out)
}

/// A functional tested for monotonicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Measure(MeasureId),
    /// `‖ρ^(δ)‖₁`
    DeltaNorm(f64),
}

impl Monotone {
    pub fn evaluate(&self, rho: &DensityMatrix, a: &HermitianObservable) -> Result<f64> {
        match *self {
            Monotone::Measure(id) => Ok(evaluate(id, rho, a, &EvalOptions::default())?.value),
            Monotone::DeltaNorm(delta) => delta_coherence_norm(rho, a, delta),
        }
    }

    fn pure_only(&self) -> bool {
        matches!(self, Monotone::Measure(MeasureId::Variance))
    }
}

impl std::str::FromStr for Monotone {
    type Err = Error;

    /// `qfi`, `variance`, …, or `delta:<gap>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("delta:") {
            Some(v) => {
                v.parse().map(Monotone::DeltaNorm).map_err(|_| Error::InvalidParameter(format!("bad gap in `{s}`")))
            }
            None => s.parse().map(Monotone::Measure),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub monotone: Monotone,
    pub before: f64,
    /// `None` when the deterministic output is not a valid input for the measure.
    pub deterministic_after: Option<f64>,
    pub selective: Vec<(f64, f64)>,
    pub average_after: f64,
    pub m2a: Option<bool>,
    pub m2b: bool,
    pub slack: f64,
}

impl MonotonicityReport {
    pub fn m2a_excess(&self) -> f64 {
        self.deterministic_after.map_or(f64::NEG_INFINITY, |v| v - self.before)
    }

    pub fn m2b_excess(&self) -> f64 {
        self.average_after - self.before
    }
}

/// Measure before, after deterministic application, and on selective average; slack `1e-8`.
pub fn monotonicity_report(
    monotone: Monotone,
    rho: &DensityMatrix,
    a: &HermitianObservable,
    channel: &FreeChannel,
) -> Result<MonotonicityReport> {
    let slack = 1e-8;
    let before = monotone.evaluate(rho, a)?;
    let deterministic_after = if channel.trace_preserving {
        let out = apply_to_state(channel, rho)?;
        if monotone.pure_only() && out.as_pure().is_none() {
            None
        } else {
            Some(monotone.evaluate(&out, a)?)
        }
    } else {
        None
    };
    let selective: Vec<(f64, f64)> = apply_selective(channel, rho)?
        .into_iter()
        .map(|o| Ok((o.probability, monotone.evaluate(&o.state, a)?)))
        .collect::<Result<_>>()?;
    let average_after = selective.iter().map(|(p, v)| p * v).sum();
    Ok(MonotonicityReport {
        monotone,
        before,
        deterministic_after,
        m2a: deterministic_after.map(|v| v <= before + slack),
        m2b: average_after <= before + slack,
        selective,
        average_after,
        slack,
    })
}

/// Observable with a random integer spectrum in `0..=levels`, rotated by a Haar unitary.
pub fn random_integer_observable(dim: usize, levels: u32, seed: u64) -> Result<HermitianObservable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..dim).map(|_| rng.random_range(0..=levels) as f64).collect();
    let u = linalg::haar_unitary(&mut rng, dim);
    let diag = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        values.iter().map(|&v| num_complex::Complex64::new(v, 0.0)),
    ));
    HermitianObservable::new(linalg::hermitian_part(&(&u * diag * u.adjoint())))
}

/// One random `(A, ρ, channel)` case of the fuzzer.
pub fn fuzz_case(dim: usize, pure: bool, seed: u64) -> Result<(HermitianObservable, DensityMatrix, FreeChannel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_integer_observable(dim, 3, rng.random())?;
    let rho = if pure {
        random_pure_state(dim, rng.random()).density()
    } else {
        random_density(dim, rng.random_range(1..=dim), rng.random())?
    };
    let gaps = gap_set(&a, None)?;
    let n_modes = rng.random_range(1..=3);
    let modes: Vec<f64> = (0..n_modes).map(|_| gaps.gaps()[rng.random_range(0..gaps.gaps().len())]).collect();
    let n_kraus = rng.random_range(1..=4);
    let scale = rng.random_range(0.2..=1.0);
    let channel = random_free_channel(&a, &modes, n_kraus, scale, rng.random())?;
    Ok((a, rho, channel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub monotone: Monotone,
    pub dim: usize,
    pub channels: usize,
    pub seed: u64,
    pub m2a_checked: usize,
    pub m2a_failures: usize,
    pub m2b_failures: usize,
    pub covariance_failures: usize,
    pub worst_m2a_excess: f64,
    pub worst_m2b_excess: f64,
    /// Case index with the largest excess over either condition.
    pub worst_case: usize,
}

/// Checks M2a/M2b for `channels` random trace-preserving free channels.
pub fn fuzz_monotonicity(monotone: Monotone, dim: usize, channels: usize, seed: u64) -> Result<FuzzSummary> {
    if dim < 2 || channels == 0 {
        return Err(Error::InvalidParameter("fuzzing needs dim ≥ 2 and at least one channel".into()));
    }
    let reports: Vec<(MonotonicityReport, bool)> = (0..channels)
        .into_par_iter()
        .map(|i| {
            let case_seed = derive_seed(seed, i as u64);
            let (a, rho, channel) = fuzz_case(dim, monotone.pure_only(), case_seed)?;
            let covariant =
                channel.completeness_defect() <= 1e-9 && verify_covariance(&channel, &a, 1, case_seed)?.passed;
            Ok((monotonicity_report(monotone, &rho, &a, &channel)?, covariant))
        })
        .collect::<Result<_>>()?;
    let excess = |r: &MonotonicityReport| r.m2a_excess().max(r.m2b_excess());
    let worst_case = reports
        .iter()
        .enumerate()
        .max_by(|x, y| excess(&x.1 .0).total_cmp(&excess(&y.1 .0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(FuzzSummary {
        monotone,
        dim,
        channels,
        seed,
        m2a_checked: reports.iter().filter(|r| r.0.m2a.is_some()).count(),
        m2a_failures: reports.iter().filter(|r| r.0.m2a == Some(false)).count(),
        m2b_failures: reports.iter().filter(|r| !r.0.m2b).count(),
        covariance_failures: reports.iter().filter(|r| !r.1).count(),
        worst_m2a_excess: reports.iter().map(|r| r.0.m2a_excess()).fold(f64::NEG_INFINITY, f64::max),
        worst_m2b_excess: reports.iter().map(|r| r.0.m2b_excess()).fold(f64::NEG_INFINITY, f64::max),
        worst_case,
    })
}

/// Mode-0 channel built from the eigenprojectors of `A` (full dephasing).
pub fn dephasing_channel(a: &HermitianObservable) -> Result<FreeChannel> {
    let gaps = gap_set(a, None)?;
    let d = a.dim();
    let kraus = (0..gaps.levels().len())
        .map(|level| {
            let p = ComplexMatrix::from_fn(
                d,
                d,
                |i, j| {
                    if i == j && gaps.level_of(i) == level {
                        linalg::ONE
                    } else {
                        ZERO
                    }
                },
            );
            a.from_eigenbasis(&p)
        })
        .collect::<Vec<_>>();
    let labels = vec![0.0; kraus.len()];
    FreeChannel::new(kraus, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::il_measure;
    use crate::modes::dephase;
    use crate::state::tensor_states;
    use num_complex::Complex64;

    fn spectrum() -> HermitianObservable {
        HermitianObservable::diagonal(vec![0.0, 1.0, 1.0, 2.0, 3.0])
    }

    #[test]
    fn mode_zero_channel_preserves_incoherent_states() {
        let a = spectrum();
        let ch = random_free_channel(&a, &[0.0], 3, 0.8, 1).unwrap();
        let gaps = gap_set(&a, None).unwrap();
        let rho = random_density(5, 5, 2).unwrap();
        let incoherent = dephase(rho.matrix(), &a, &gaps).unwrap();
        let out = apply_channel(&ch, &incoherent).unwrap();
        assert!((dephase(&out, &a, &gaps).unwrap() - &out).camax() < 1e-12);
        // commutes with dephasing in general
        let lhs = apply_channel(&ch, &dephase(rho.matrix(), &a, &gaps).unwrap()).unwrap();
        let rhs = dephase(&apply_channel(&ch, rho.matrix()).unwrap(), &a, &gaps).unwrap();
        assert!((lhs - rhs).camax() < 1e-12);
    }

    #[test]
    fn generated_channels_are_complete_and_covariant() {
        for seed in 0..1000u64 {
            let dim = 2 + seed as usize % 4;
            let (a, _, ch) = fuzz_case(dim, false, seed).unwrap();
            assert!(ch.is_trace_preserving());
            assert!(ch.completeness_defect() <= 1e-9, "seed {seed}");
            let v = verify_covariance(&ch, &a, 1, seed).unwrap();
            assert!(v.passed, "seed {seed}: {v:?}");
        }
    }

    #[test]
    fn zero_kraus_is_identity() {
        let ch = random_free_channel(&spectrum(), &[1.0], 0, 1.0, 3).unwrap();
        let rho = random_density(5, 3, 4).unwrap();
        assert!((apply_channel(&ch, rho.matrix()).unwrap() - rho.matrix()).camax() < 1e-15);
    }

    #[test]
    fn rejects_unknown_gap_and_bad_scale() {
        assert!(matches!(random_free_channel(&spectrum(), &[0.5], 2, 1.0, 0), Err(Error::GapNotFound { .. })));
        assert!(random_free_channel(&spectrum(), &[1.0], 2, 1.5, 0).is_err());
    }

    #[test]
    fn mixed_gap_kraus_fails_with_named_pair() {
        let a = HermitianObservable::diagonal(vec![0.0, 1.0, 3.0]);
        // |0⟩⟨1| has gap −1, |1⟩⟨2| has gap −2
        let mut k = ComplexMatrix::zeros(3, 3);
        k[(0, 1)] = linalg::ONE;
        k[(1, 2)] = linalg::ONE;
        let ch = FreeChannel::new(vec![k], vec![-1.0]).unwrap();
        let v = verify_covariance(&ch, &a, 5, 1).unwrap();
        assert!(!v.passed);
        assert_eq!(v.support_violations.len(), 1);
        assert_eq!(v.support_violations[0].pair, (1, 2));
        assert!(v.max_residual > 1e-3);
    }

    #[test]
    fn unitary_generated_by_a_is_covariant() {
        let a = crate::channels::random_integer_observable(4, 3, 9).unwrap();
        let e = linalg::eigh(&a.matrix());
        let u = e.vectors.clone()
            * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                4,
                e.values.iter().map(|v| Complex64::from_polar(1.0, -v)),
            ))
            * e.vectors.adjoint();
        let ch = FreeChannel::new(vec![u], vec![0.0]).unwrap();
        assert!(verify_covariance(&ch, &a, 10, 2).unwrap().passed);
    }

    #[test]
    fn selective_examples() {
        let z = HermitianObservable::pauli_z();
        let ch = dephasing_channel(&z).unwrap();
        let plus = PureState::equal_superposition(2, 0, 1).unwrap().density();
        let out = apply_to_state(&ch, &plus).unwrap();
        assert!((out.matrix() - DensityMatrix::maximally_mixed(2).matrix()).camax() < 1e-15);
        let outcomes = apply_selective(&ch, &plus).unwrap();
        assert_eq!(outcomes.len(), 2);
        let mut seen = vec![];
        for o in &outcomes {
            assert!((o.probability - 0.5).abs() < 1e-15);
            seen.push((0..2).find(|&k| (o.state.matrix()[(k, k)].re - 1.0).abs() < 1e-15).unwrap());
        }
        seen.sort();
        assert_eq!(seen, vec![0, 1]);
        // zero-probability outcome dropped
        let zero = PureState::basis(2, 0).density();
        assert_eq!(apply_selective(&ch, &zero).unwrap().len(), 1);
        let (a, rho, ch) = fuzz_case(5, false, 77).unwrap();
        let total: f64 = apply_selective(&ch, &rho).unwrap().iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(a.dim(), 5);
    }

    #[test]
    fn qfi_and_relative_entropy_fuzz() {
        for m in [
            Monotone::Measure(MeasureId::Qfi),
            Monotone::Measure(MeasureId::RelEnt),
            Monotone::Measure(MeasureId::Skew),
        ] {
            let s = fuzz_monotonicity(m, 4, 60, 5).unwrap();
            assert_eq!(s.m2a_failures + s.m2b_failures + s.covariance_failures, 0, "{s:?}");
            assert_eq!(s.m2a_checked, 60);
        }
        let s = fuzz_monotonicity(Monotone::Measure(MeasureId::Variance), 4, 60, 6).unwrap();
        assert_eq!(s.m2a_failures + s.m2b_failures, 0, "{s:?}");
    }

    #[test]
    fn delta_norm_fuzz() {
        let s = fuzz_monotonicity(Monotone::DeltaNorm(1.0), 4, 60, 8);
        // gap 1 need not exist for every random spectrum
        match s {
            Ok(s) => assert_eq!(s.m2a_failures + s.m2b_failures, 0, "{s:?}"),
            Err(e) => assert!(matches!(e, Error::GapNotFound { .. })),
        }
    }

    #[test]
    fn ancilla_replacement_raises_il() {
        let a = HermitianObservable::pauli_z();
        let rho = PureState::new(nalgebra::DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]))
            .unwrap()
            .density();
        let sigma = DensityMatrix::maximally_mixed(2);
        let joint = tensor_states(&rho, &sigma).unwrap();
        let big = a.extend_identity(2).unwrap();
        let before = il_measure(&joint, &big).unwrap();
        assert!((before - il_measure(&rho, &a).unwrap() * sigma.purity()).abs() < 1e-12);
        let ch = ancilla_replacement_channel(2, &PureState::basis(2, 0));
        assert!(verify_covariance(&ch, &big, 5, 1).unwrap().passed);
        let report = monotonicity_report(Monotone::Measure(MeasureId::Il), &joint, &big, &ch).unwrap();
        let after = report.deterministic_after.unwrap();
        assert!((after / before - 2.0).abs() < 1e-9);
        assert_eq!(report.m2a, Some(false));
    }

    #[test]
    fn monotone_parsing() {
        assert_eq!("qfi".parse::<Monotone>().unwrap(), Monotone::Measure(MeasureId::Qfi));
        assert_eq!("delta:2".parse::<Monotone>().unwrap(), Monotone::DeltaNorm(2.0));
        assert!("delta:x".parse::<Monotone>().is_err());
    }
}
