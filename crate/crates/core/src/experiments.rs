//! Drivers for the exact scaling table of `ρ_N` and the many-copy comparison
//! of δ-coherence profiles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::measures::{il_measure, qfi, variance};
use crate::modes::RELATIVE_GAP_TOLERANCE;
use crate::state::{DensityMatrix, HermitianObservable, PureState};

/// Hilbert-space dimension cap for the experiment drivers.
pub const EXPERIMENT_DIM_CAP: usize = 1 << 14;

fn check_even_n(n: usize) -> Result<()> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::InvalidParameter(format!("N must be even and positive, got {n}")));
    }
    if n > 14 {
        return Err(Error::ResourceLimit { dim: 1usize << n.min(63), cap: EXPERIMENT_DIM_CAP });
    }
    Ok(())
}

/// `Σ_k (2/N) |ψ_k⟩⟨ψ_k|` with `|ψ_k⟩ = (|0^{N−k}1^k⟩ + |1^{N−k}0^k⟩)/√2`,
/// `k = 0, …, N/2 − 1`. Qubit 0 is the most significant bit.
pub fn build_rho_n(n: usize) -> Result<DensityMatrix> {
    check_even_n(n)?;
    let dim = 1usize << n;
    let half = n / 2;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut vectors = ComplexMatrix::zeros(dim, half);
    for k in 0..half {
        let low = (1usize << k) - 1;
        vectors[(low, k)] = amp;
        vectors[(dim - 1 - low, k)] = amp;
    }
    DensityMatrix::from_orthonormal_ensemble(&vec![2.0 / n as f64; half], vectors)
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n == 0 || n > 14 {
        return Err(Error::InvalidParameter(format!("GHZ needs 1 ≤ N ≤ 14, got {n}")));
    }
    let dim = 1usize << n;
    let mut amps = crate::linalg::ComplexVector::zeros(dim);
    amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[dim - 1] = amps[0];
    PureState::new(amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub qfi_value: f64,
    pub il_value: f64,
    pub qfi_formula: f64,
    pub il_formula: f64,
    pub ratio: f64,
}

/// `4(N+1)(N+2)/3`.
pub fn qfi_formula(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n + 1.0) * (n + 2.0) / 3.0
}

/// `Σ_{k=0}^{N/2} (2/N)² (N − 2k)²`.
pub fn il_formula(n: usize) -> f64 {
    let w = 2.0 / n as f64;
    (0..=n / 2).map(|k| (w * (n as f64 - 2.0 * k as f64)).powi(2)).sum()
}

/// QFI and `I_L` of `ρ_N` for the total `σ^z`, next to the closed forms.
pub fn scaling_table(n_list: &[usize]) -> Result<Vec<ScalingRow>> {
    for &n in n_list {
        check_even_n(n)?;
    }
    n_list
        .par_iter()
        .map(|&n| {
            let rho = build_rho_n(n)?;
            let z = HermitianObservable::collective_z(n);
            let qfi_value = qfi(&rho, &z)?;
            let il_value = il_measure(&rho, &z)?;
            Ok(ScalingRow {
                n,
                qfi_value,
                il_value,
                qfi_formula: qfi_formula(n),
                il_formula: il_formula(n),
                ratio: qfi_value / il_value,
            })
        })
        .collect()
}

/// δ-coherence profiles of `ψ^{⊗n}` and `φ^{⊗m}` for the collective observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyProfile {
    pub n: usize,
    pub m: usize,
    /// `round(n V(ψ)/V(φ))` before the dimension cap was applied.
    pub m_requested: usize,
    pub capped: bool,
    pub dim_cap: usize,
    /// Mean shift `n⟨A⟩_ψ − m⟨A⟩_φ` between the two eigenvalue distributions.
    pub x0: f64,
    pub delta_grid: Vec<f64>,
    pub psi_norms: Vec<f64>,
    pub phi_norms: Vec<f64>,
    pub profile_distance: f64,
    /// Gaps of the common grid where both norms vanish (excluded from the distance).
    pub zero_gaps: Vec<f64>,
}

/// Eigenvalue distribution of `A` in `ψ`, as `(level, weight)` ascending.
fn level_distribution(psi: &PureState, a: &HermitianObservable, tol: f64) -> Vec<(f64, f64)> {
    let eig = a.eigen();
    let amps = match eig.basis {
        None => psi.amplitudes().clone(),
        Some(u) => u.adjoint() * psi.amplitudes(),
    };
    merge_levels(eig.values.iter().zip(amps.iter()).map(|(&v, c)| (v, c.norm_sqr())).collect(), tol)
}

fn merge_levels(mut items: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    items.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::with_capacity(items.len());
    for (v, w) in items {
        match out.last_mut() {
            Some(last) if v - last.2 <= tol => {
                last.1 += w;
                last.2 = v;
            }
            _ => out.push((v, w, v)),
        }
    }
    out.into_iter().map(|(v, w, _)| (v, w)).collect()
}

/// Distribution of `Σ_i A_i` over `copies` independent copies.
fn convolve_power(single: &[(f64, f64)], copies: usize, tol: f64) -> Vec<(f64, f64)> {
    let mut dist = vec![(0.0, 1.0)];
    for _ in 0..copies {
        let next = dist.iter().flat_map(|&(x, p)| single.iter().map(move |&(y, q)| (x + y, p * q))).collect();
        dist = merge_levels(next, tol);
    }
    dist
}

fn lookup(dist: &[(f64, f64)], x: f64, tol: f64) -> f64 {
    let pos = dist.partition_point(|&(v, _)| v < x - tol);
    match dist.get(pos) {
        Some(&(v, w)) if (v - x).abs() <= tol => w,
        _ => 0.0,
    }
}

/// Gaps of the collective observable and `‖ρ^(δ)‖₁` on each, for a pure
/// product state with eigenvalue distribution `dist`. For a pure state the
/// singular values of `ρ^(δ)` are `√(p(X+δ) p(X))`.
fn copy_profile(dist: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let diffs: Vec<(f64, f64)> = dist.iter().flat_map(|&(x, _)| dist.iter().map(move |&(y, _)| (y - x, 0.0))).collect();
    let grid = merge_levels(diffs, tol);
    grid.into_iter()
        .map(|(delta, _)| {
            let norm = dist.iter().map(|&(x, p)| (p * lookup(dist, x + delta, tol)).sqrt()).sum();
            (delta, norm)
        })
        .collect()
}

/// Piecewise-linear interpolation of a profile; zero outside its grid.
fn interpolate(profile: &[(f64, f64)], delta: f64, tol: f64) -> f64 {
    let pos = profile.partition_point(|&(g, _)| g < delta - tol);
    match profile.get(pos) {
        None => 0.0,
        Some(&(g, v)) if (g - delta).abs() <= tol => v,
        Some(_) if pos == 0 => 0.0,
        Some(&(g1, v1)) => {
            let (g0, v0) = profile[pos - 1];
            v0 + (v1 - v0) * (delta - g0) / (g1 - g0)
        }
    }
}

fn copies_within_cap(dim: usize, copies: usize, cap: usize) -> bool {
    dim.checked_pow(copies as u32).is_some_and(|d| d <= cap)
}

/// Compares `ψ^{⊗n}` with `φ^{⊗m}`, `m = round(n V(ψ)/V(φ))`, through their
/// δ-coherence profiles for `Σ_i A_i`. `m` is reduced to the largest count
/// within the dimension cap if needed, and the profile records that.
pub fn copy_equivalence(psi: &PureState, a: &HermitianObservable, phi: &PureState, n: usize) -> Result<CopyProfile> {
    let d = a.dim();
    for s in [psi, phi] {
        if s.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s.dim() });
        }
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one copy".into()));
    }
    if !copies_within_cap(d, n, EXPERIMENT_DIM_CAP) {
        return Err(Error::ResourceLimit { dim: d.saturating_pow(n as u32), cap: EXPERIMENT_DIM_CAP });
    }
    let v_psi = variance(psi, a)?;
    let v_phi = variance(phi, a)?;
    let range = a.spectral_range();
    let unit_tol = if range > 0.0 { RELATIVE_GAP_TOLERANCE * range } else { RELATIVE_GAP_TOLERANCE };
    if v_phi <= unit_tol * unit_tol {
        return Err(Error::InvalidParameter("reference state has no coherence in the observable (V = 0)".into()));
    }
    let m_requested = (n as f64 * v_psi / v_phi).round() as usize;
    if m_requested == 0 {
        return Err(Error::InvalidParameter(format!("copy ratio rounds to m = 0 (V(ψ) = {v_psi:.3e})")));
    }
    let mut m = m_requested;
    while !copies_within_cap(d, m, EXPERIMENT_DIM_CAP) {
        m -= 1;
    }

    let tol = unit_tol * n.max(m) as f64;
    let p1 = level_distribution(psi, a, unit_tol);
    let q1 = level_distribution(phi, a, unit_tol);
    let psi_profile = copy_profile(&convolve_power(&p1, n, tol), tol);
    let phi_profile = copy_profile(&convolve_power(&q1, m, tol), tol);
    if psi_profile.len() < 2 || phi_profile.len() < 2 {
        return Err(Error::InvalidParameter(
            "a gap grid has no nonzero gaps, so the profiles cannot be compared".into(),
        ));
    }

    let mean = |dist: &[(f64, f64)]| dist.iter().map(|&(v, w)| v * w).sum::<f64>();
    let x0 = n as f64 * mean(&p1) - m as f64 * mean(&q1);

    let grid: Vec<f64> =
        merge_levels(psi_profile.iter().chain(phi_profile.iter()).map(|&(g, _)| (g, 0.0)).collect(), tol)
            .into_iter()
            .map(|(g, _)| g)
            .collect();
    let mut delta_grid = Vec::with_capacity(grid.len());
    let mut psi_norms = Vec::with_capacity(grid.len());
    let mut phi_norms = Vec::with_capacity(grid.len());
    let mut zero_gaps = Vec::new();
    let mut profile_distance = 0.0;
    for g in grid {
        let u = interpolate(&psi_profile, g, tol);
        let v = interpolate(&phi_profile, g, tol);
        if u < 1e-12 && v < 1e-12 {
            zero_gaps.push(g);
            continue;
        }
        profile_distance += (u - v).abs();
        delta_grid.push(g);
        psi_norms.push(u);
        phi_norms.push(v);
    }
    Ok(CopyProfile {
        n,
        m,
        m_requested,
        capped: m != m_requested,
        dim_cap: EXPERIMENT_DIM_CAP,
        x0,
        delta_grid,
        psi_norms,
        phi_norms,
        profile_distance,
        zero_gaps,
    })
}
