//! Scalar coherence and asymmetry measures of a state with respect to an observable.
//!
//! The spectral measures (QFI, skew information, `I_L`) are evaluated from the
//! support of `ρ` only. With `ρ = Σ_a λ_a |ψ_a⟩⟨ψ_a|` restricted to `λ_a > 0`,
//! `G_ab = ⟨ψ_a|A|ψ_b⟩` and `n_a = ‖A|ψ_a⟩‖²`, every sum over the kernel of
//! `ρ` collapses through `Σ_k |⟨ψ_a|A|k⟩|² = n_a − Σ_b |G_ab|²`. This keeps
//! low-rank states on large spaces cheap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::modes::{dephase, gap_set};
use crate::state::{phase_conjugate, DensityMatrix, HermitianObservable, PureState, RANK_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureId {
    Variance,
    Qfi,
    QfiBures,
    Skew,
    Il,
    RelEnt,
    Roof,
}

impl MeasureId {
    pub const ALL: [MeasureId; 7] = [
        MeasureId::Variance,
        MeasureId::Qfi,
        MeasureId::QfiBures,
        MeasureId::Skew,
        MeasureId::Il,
        MeasureId::RelEnt,
        MeasureId::Roof,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureId::Variance => "variance",
            MeasureId::Qfi => "qfi",
            MeasureId::QfiBures => "qfi_bures",
            MeasureId::Skew => "skew",
            MeasureId::Il => "il",
            MeasureId::RelEnt => "rel_ent",
            MeasureId::Roof => "roof",
        }
    }
}

impl std::str::FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relent" => Ok(MeasureId::RelEnt),
            "bures" => Ok(MeasureId::QfiBures),
            _ => MeasureId::ALL
                .into_iter()
                .find(|m| m.name() == s)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rank_cutoff: f64,
    /// Ordered eigenvalue pairs dropped from spectral sums (both below the cutoff).
    pub terms_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub value: f64,
    pub measure_id: MeasureId,
    pub diagnostics: Diagnostics,
}

/// `⟨ψ|A²|ψ⟩ − ⟨ψ|A|ψ⟩²`.
pub fn variance(psi: &PureState, a: &HermitianObservable) -> Result<f64> {
    check_dim(psi.dim(), a)?;
    let v = ComplexMatrix::from_column_slice(psi.dim(), 1, psi.amplitudes().as_slice());
    let av = a.apply(&v);
    let second = linalg::hs_norm_sqr(&av);
    let first = (v.adjoint() * &av)[(0, 0)].re;
    Ok((second - first * first).max(0.0))
}

/// Matrix elements of `A` on the support of `ρ`.
struct SupportElements {
    values: Vec<f64>,
    /// `G_ab = ⟨ψ_a|A|ψ_b⟩`
    gram: ComplexMatrix,
    /// `‖A|ψ_a⟩‖²`
    norms: Vec<f64>,
}

fn support_elements(rho: &DensityMatrix, a: &HermitianObservable, cutoff: f64) -> SupportElements {
    let (values, vectors) = rho.spectrum().support(cutoff);
    let av = a.apply(&vectors);
    let gram = vectors.adjoint() * &av;
    let norms = av.column_iter().map(|c| c.norm_squared()).collect();
    SupportElements { values, gram, norms }
}

impl SupportElements {
    /// `Σ_{k ∉ support} |⟨ψ_a|A|k⟩|²`.
    fn leakage(&self, a: usize) -> f64 {
        let inside: f64 = self.gram.row(a).iter().map(|z| z.norm_sqr()).sum();
        (self.norms[a] - inside).max(0.0)
    }
}

/// Quantum Fisher information
/// `F = 2 Σ_{λ_a+λ_b>0} (λ_a−λ_b)²/(λ_a+λ_b) |⟨ψ_a|A|ψ_b⟩|²`.
pub fn qfi(rho: &DensityMatrix, a: &HermitianObservable) -> Result<f64> {
    Ok(qfi_report(rho, a, RANK_CUTOFF)?.value)
}

/// [`qfi`] with an explicit rank cutoff: eigenvalues at or below it count as zero.
pub fn qfi_report(rho: &DensityMatrix, a: &HermitianObservable, rank_cutoff: f64) -> Result<MeasureReport> {
    check_dim(rho.dim(), a)?;
    let s = support_elements(rho, a, rank_cutoff);
    let r = s.values.len();
    let mut total = 0.0;
    for i in 0..r {
        for j in 0..r {
            let (li, lj) = (s.values[i], s.values[j]);
            total += 2.0 * (li - lj).powi(2) / (li + lj) * s.gram[(i, j)].norm_sqr();
        }
        // (a, k) and (k, a) with λ_k = 0 each contribute 2 λ_a |A_ak|²
        total += 4.0 * s.values[i] * s.leakage(i);
    }
    let kernel = rho.dim() - r;
    Ok(MeasureReport {
        value: total,
        measure_id: MeasureId::Qfi,
        diagnostics: Diagnostics { rank_cutoff, terms_skipped: kernel * kernel, ..Default::default() },
    })
}

/// Root fidelity `tr √(√ρ σ √ρ)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let root = rho.sqrt();
    let inner = &root * sigma.matrix() * &root;
    Ok(linalg::eigh(&inner).values.iter().map(|v| v.max(0.0).sqrt()).sum())
}

/// QFI from the Bures fidelity of `ρ` and `T_dx(ρ)`: `8 (1 − Fid) / dx²`.
pub fn qfi_bures_oracle(rho: &DensityMatrix, a: &HermitianObservable, dx: f64) -> Result<f64> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
    }
    let shifted = phase_conjugate(rho, a, dx)?;
    let fid = fidelity(rho, &shifted)?;
    Ok(8.0 * (1.0 - fid) / (dx * dx))
}

/// Wigner–Yanase skew information `−½ tr([√ρ, A]²)`.
pub fn skew_information(rho: &DensityMatrix, a: &HermitianObservable) -> Result<f64> {
    check_dim(rho.dim(), a)?;
    let s = support_elements(rho, a, RANK_CUTOFF);
    // tr(ρA²) − tr(√ρ A √ρ A)
    let mut total = 0.0;
    for i in 0..s.values.len() {
        total += s.values[i] * s.norms[i];
        for j in 0..s.values.len() {
            total -= (s.values[i] * s.values[j]).sqrt() * s.gram[(i, j)].norm_sqr();
        }
    }
    Ok(total.max(0.0))
}

/// `I_L = −½ tr([ρ, A]²) = tr(ρ²A²) − tr(ρAρA)`.
pub fn il_measure(rho: &DensityMatrix, a: &HermitianObservable) -> Result<f64> {
    check_dim(rho.dim(), a)?;
    let s = support_elements(rho, a, RANK_CUTOFF);
    let mut total = 0.0;
    for i in 0..s.values.len() {
        total += s.values[i] * s.values[i] * s.norms[i];
        for j in 0..s.values.len() {
            total -= s.values[i] * s.values[j] * s.gram[(i, j)].norm_sqr();
        }
    }
    Ok(total.max(0.0))
}

/// Relative entropy of asymmetry `S(ρ^(0)) − S(ρ)` in nats.
pub fn relative_entropy_asymmetry(rho: &DensityMatrix, a: &HermitianObservable) -> Result<f64> {
    check_dim(rho.dim(), a)?;
    let gaps = gap_set(a, None)?;
    let dephased = dephase(rho.matrix(), a, &gaps)?;
    let s0 = crate::state::entropy_of(&linalg::eigh(&dephased).values);
    Ok((s0 - rho.entropy()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexRoofConfig {
    pub n_decompositions: usize,
    /// Upper limit on the environment dimension, i.e. the number of ensemble members.
    pub max_ensemble_size: usize,
    pub seed: u64,
}

impl ConvexRoofConfig {
    /// Defaults for a state of the given dimension and rank.
    pub fn for_state(dim: usize, rank: usize, seed: u64) -> Self {
        ConvexRoofConfig { n_decompositions: 2000, max_ensemble_size: dim * rank, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n_decompositions == 0 || self.max_ensemble_size == 0 {
            return Err(Error::InvalidParameter("convex-roof config fields must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RoofResult {
    /// Smallest ensemble-averaged variance found.
    pub upper_bound: f64,
    /// The minimizing ensemble `(p_μ, |ψ_μ⟩)`.
    pub best_ensemble: Vec<(f64, PureState)>,
    /// Ensemble-averaged variance of every sampled decomposition, in sample order.
    pub sample_values: Vec<f64>,
}

/// Derives an independent per-item seed (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Randomized upper bound on the convex roof of the variance.
///
/// Every decomposition of `ρ` into pure states arises from measuring the
/// environment of the purification `Σ_a √λ_a |ψ_a⟩|a⟩` after an isometry
/// `W: C^r → C^K`. Sample 0 uses `W = I`, i.e. the spectral decomposition
/// itself; every other sample draws a Haar isometry and measures in the
/// computational basis, giving members `∝ Σ_a √λ_a W_{μa} |ψ_a⟩`. The
/// environment dimension `K` cycles through `r, r+1, …, 2r` (capped by
/// `max_ensemble_size`) across samples. Samples run in parallel, each seeded
/// from `(cfg.seed, sample index)`.
pub fn convex_roof_search(rho: &DensityMatrix, a: &HermitianObservable, cfg: &ConvexRoofConfig) -> Result<RoofResult> {
    cfg.validate()?;
    check_dim(rho.dim(), a)?;
    let (values, vectors) = rho.support();
    let r = values.len();
    let k_max = (2 * r).min(cfg.max_ensemble_size).max(r);
    let weighted = {
        let mut m = vectors.clone();
        for (k, v) in values.iter().enumerate() {
            m.column_mut(k).scale_mut(v.sqrt());
        }
        m
    };

    let sample = |index: usize| -> (f64, ComplexMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, index as u64));
        let w = if index == 0 {
            linalg::identity(r)
        } else {
            let k = r + index % (k_max - r + 1);
            linalg::haar_isometry(&mut rng, k, r)
        };
        // column μ is Σ_a √λ_a W_{μa} |ψ_a⟩
        let members = &weighted * w.transpose();
        (ensemble_variance(&members, a), members)
    };

    let values_only: Vec<f64> = (0..cfg.n_decompositions).into_par_iter().map(|i| sample(i).0).collect();
    let best =
        values_only.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).map(|(i, _)| i).expect("at least one sample");
    let (upper_bound, members) = sample(best);
    let best_ensemble = members
        .column_iter()
        .filter_map(|c| {
            let p = c.norm_squared();
            (p > 1e-14).then(|| (p, PureState::normalized(c.into_owned()).expect("nonzero member")))
        })
        .collect();
    Ok(RoofResult { upper_bound, best_ensemble, sample_values: values_only })
}

/// `Σ_μ p_μ V(ψ_μ)` for unnormalized members `√p_μ |ψ_μ⟩` given as columns.
fn ensemble_variance(members: &ComplexMatrix, a: &HermitianObservable) -> f64 {
    let am = a.apply(members);
    let mut total = 0.0;
    for mu in 0..members.ncols() {
        let c = members.column(mu);
        let p = c.norm_squared();
        if p <= 1e-300 {
            continue;
        }
        let ac = am.column(mu);
        let first = c.dotc(&ac).re;
        total += ac.norm_squared() - first * first / p;
    }
    total
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub samples: usize,
    pub seed: u64,
    pub dx: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { samples: 2000, seed: 0, dx: 1e-4 }
    }
}

/// Evaluates any measure by id.
pub fn evaluate(
    id: MeasureId,
    rho: &DensityMatrix,
    a: &HermitianObservable,
    opts: &EvalOptions,
) -> Result<MeasureReport> {
    let base = Diagnostics { rank_cutoff: RANK_CUTOFF, ..Default::default() };
    let (value, diagnostics) = match id {
        MeasureId::Qfi => return qfi_report(rho, a, RANK_CUTOFF),
        MeasureId::Variance => {
            let psi = rho
                .as_pure()
                .ok_or_else(|| Error::InvalidParameter("the variance is defined for pure states only".into()))?;
            (variance(&psi, a)?, base)
        }
        MeasureId::QfiBures => (qfi_bures_oracle(rho, a, opts.dx)?, Diagnostics { dx: Some(opts.dx), ..base }),
        MeasureId::Skew => (skew_information(rho, a)?, base),
        MeasureId::Il => (il_measure(rho, a)?, base),
        MeasureId::RelEnt => (relative_entropy_asymmetry(rho, a)?, base),
        MeasureId::Roof => {
            let cfg = ConvexRoofConfig {
                n_decompositions: opts.samples,
                seed: opts.seed,
                ..ConvexRoofConfig::for_state(rho.dim(), rho.rank(), opts.seed)
            };
            (convex_roof_search(rho, a, &cfg)?.upper_bound, Diagnostics { samples: Some(opts.samples), ..base })
        }
    };
    Ok(MeasureReport { value, measure_id: id, diagnostics })
}

fn check_dim(dim: usize, a: &HermitianObservable) -> Result<()> {
    if dim != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: dim });
    }
    Ok(())
}
