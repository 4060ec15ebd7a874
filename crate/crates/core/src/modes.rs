//! Decomposition of states into δ-coherence modes of an observable.
//!
//! For an observable `A = Σ_i a_i |i⟩⟨i|`, the mode `ρ^(δ)` keeps exactly the
//! matrix elements `ρ_ij` (in the eigenbasis of `A`) with `a_i − a_j = δ`.
//! Eigenvalues are floating-point, so differences are grouped: eigenvalues
//! first merge into levels, then level differences merge into gaps, both by
//! single-linkage clustering at the same tolerance.

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};
use crate::state::{DensityMatrix, HermitianObservable};

/// Default grouping tolerance relative to the spectral range of `A`.
pub const RELATIVE_GAP_TOLERANCE: f64 = 1e-9;

/// The set `Δ` of eigenvalue differences of an observable.
#[derive(Debug, Clone)]
pub struct GapSet {
    gaps: Vec<f64>,
    tolerance: f64,
    /// level id of every eigenvalue, in the order of `A.eigen().values`
    level_of: Vec<usize>,
    levels: Vec<f64>,
    /// `gap_of_levels[p * levels.len() + q]` is the gap index of `level_p − level_q`
    gap_of_levels: Vec<usize>,
}

impl GapSet {
    /// Gaps in ascending order.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Distinct eigenvalues of `A` after grouping.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_of(&self, i: usize) -> usize {
        self.level_of[i]
    }

    pub fn dim(&self) -> usize {
        self.level_of.len()
    }

    /// Index of the gap containing `delta`.
    pub fn index_of(&self, delta: f64) -> Result<usize> {
        let slack = 10.0 * self.tolerance;
        let (idx, dist) = self
            .gaps
            .iter()
            .enumerate()
            .map(|(k, g)| (k, (g - delta).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("gap set always contains 0");
        if dist <= slack {
            Ok(idx)
        } else {
            Err(Error::GapNotFound { delta, tolerance: slack })
        }
    }

    pub fn zero_index(&self) -> usize {
        self.gaps.iter().position(|&g| g == 0.0).expect("0 is always a gap")
    }

    /// Gap index of the eigen-index pair `(i, j)`.
    pub fn pair_gap(&self, i: usize, j: usize) -> usize {
        let l = self.levels.len();
        self.gap_of_levels[self.level_of[i] * l + self.level_of[j]]
    }

    /// All ordered eigen-index pairs `(i, j)` with `a_i − a_j ≈ delta`.
    pub fn index_pairs(&self, delta: f64) -> Result<Vec<(usize, usize)>> {
        let g = self.index_of(delta)?;
        let n = self.dim();
        Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.pair_gap(i, j) == g).collect())
    }

    /// Keeps only the entries of `x` (given in the eigenbasis of `A`) that lie in gap `g`.
    pub fn filter(&self, x: &ComplexMatrix, g: usize) -> ComplexMatrix {
        let n = self.dim();
        ComplexMatrix::from_fn(n, n, |i, j| if self.pair_gap(i, j) == g { x[(i, j)] } else { ZERO })
    }
}

/// Groups the eigenvalue differences of `A`; `group_tolerance = None` uses
/// `1e-9 ·` the spectral range (or `1e-9` for a multiple of the identity).
pub fn gap_set(a: &HermitianObservable, group_tolerance: Option<f64>) -> Result<GapSet> {
    let range = a.spectral_range();
    let tol = match group_tolerance {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidParameter(format!("group tolerance must be positive, got {t}"))),
        None if range > 0.0 => RELATIVE_GAP_TOLERANCE * range,
        None => RELATIVE_GAP_TOLERANCE,
    };
    let values = a.eigen().values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let level_clusters = single_linkage(&sorted, tol)?;
    let mut level_of = vec![0; values.len()];
    let mut levels = Vec::with_capacity(level_clusters.len());
    for (lvl, range) in level_clusters.iter().enumerate() {
        levels.push(representative(&sorted[range.clone()]));
        for pos in range.clone() {
            level_of[order[pos]] = lvl;
        }
    }

    // nonnegative level differences (levels are ascending), clustered, then mirrored
    let l = levels.len();
    let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(l * (l + 1) / 2);
    for p in 0..l {
        for q in 0..=p {
            diffs.push((levels[p] - levels[q], p, q));
        }
    }
    diffs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let diff_values: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let clusters = single_linkage(&diff_values, tol)?;
    let positive: Vec<f64> = clusters.iter().map(|r| representative(&diff_values[r.clone()])).collect();
    debug_assert_eq!(positive[0], 0.0);

    let k = positive.len();
    // ascending: −g_{k−1}, …, −g_1, 0, g_1, …, g_{k−1}
    let mut gaps: Vec<f64> = positive[1..].iter().rev().map(|g| -g).collect();
    gaps.extend_from_slice(&positive);
    let mut gap_of_levels = vec![0; l * l];
    for (c, r) in clusters.iter().enumerate() {
        for &(_, p, q) in &diffs[r.clone()] {
            gap_of_levels[p * l + q] = (k - 1) + c;
            gap_of_levels[q * l + p] = (k - 1) - c;
        }
    }
    Ok(GapSet { gaps, tolerance: tol, level_of, levels, gap_of_levels })
}

/// Splits sorted values into maximal runs whose consecutive spacing is `<= tol`.
fn single_linkage(sorted: &[f64], tol: f64) -> Result<Vec<std::ops::Range<usize>>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let spread = sorted[i - 1] - sorted[start];
            if spread > 10.0 * tol {
                return Err(Error::AmbiguousGaps { spread, tolerance: tol });
            }
            out.push(start..i);
            start = i;
        }
    }
    Ok(out)
}

/// Median member, so exactly repeated values are reproduced exactly.
fn representative(members: &[f64]) -> f64 {
    members[members.len() / 2]
}

/// Which basis a mode block is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Eigenbasis of the observable, in the order of its eigenvalues.
    Observable,
    Computational,
}

/// One mode `ρ^(δ)`.
#[derive(Debug, Clone)]
pub struct ModeComponent {
    pub delta: f64,
    pub block: ComplexMatrix,
    pub basis: Basis,
}

impl ModeComponent {
    pub fn to_computational(&self, a: &HermitianObservable) -> ModeComponent {
        match self.basis {
            Basis::Computational => self.clone(),
            Basis::Observable => {
                ModeComponent { delta: self.delta, block: a.from_eigenbasis(&self.block), basis: Basis::Computational }
            }
        }
    }

    /// `(ρ^(δ))† = ρ^(−δ)`.
    pub fn adjoint(&self) -> ModeComponent {
        ModeComponent { delta: -self.delta, block: self.block.adjoint(), basis: self.basis }
    }

    pub fn trace_norm(&self) -> f64 {
        linalg::trace_norm(&self.block)
    }
}

/// `ρ^(δ)` in the eigenbasis of `A`.
pub fn mode_component(rho: &DensityMatrix, a: &HermitianObservable, delta: f64) -> Result<ModeComponent> {
    let gaps = gap_set(a, None)?;
    check_dims(rho.matrix(), a)?;
    let g = gaps.index_of(delta)?;
    let inner = linalg::hermitian_part(&a.to_eigenbasis(rho.matrix()));
    Ok(ModeComponent { delta: gaps.gaps()[g], block: gaps.filter(&inner, g), basis: Basis::Observable })
}

/// [`mode_component`] for an arbitrary operator and a precomputed gap set.
pub fn mode_component_in(
    x: &ComplexMatrix,
    a: &HermitianObservable,
    gaps: &GapSet,
    delta: f64,
) -> Result<ModeComponent> {
    check_dims(x, a)?;
    let g = gaps.index_of(delta)?;
    let inner = a.to_eigenbasis(x);
    Ok(ModeComponent { delta: gaps.gaps()[g], block: gaps.filter(&inner, g), basis: Basis::Observable })
}

/// All modes of `ρ`, one per gap in ascending order. They sum to `ρ`.
pub fn mode_decompose(rho: &DensityMatrix, a: &HermitianObservable) -> Result<Vec<ModeComponent>> {
    let gaps = gap_set(a, None)?;
    check_dims(rho.matrix(), a)?;
    // symmetrized so the ±δ blocks are exact adjoints of each other
    let inner = linalg::hermitian_part(&a.to_eigenbasis(rho.matrix()));
    Ok(split(&inner, &gaps))
}

fn split(inner: &ComplexMatrix, gaps: &GapSet) -> Vec<ModeComponent> {
    gaps.gaps()
        .iter()
        .enumerate()
        .map(|(g, &delta)| ModeComponent { delta, block: gaps.filter(inner, g), basis: Basis::Observable })
        .collect()
}

pub fn decompose_operator(x: &ComplexMatrix, a: &HermitianObservable, gaps: &GapSet) -> Result<Vec<ModeComponent>> {
    check_dims(x, a)?;
    Ok(split(&a.to_eigenbasis(x), gaps))
}

/// `‖ρ^(δ)‖₁`.
pub fn delta_coherence_norm(rho: &DensityMatrix, a: &HermitianObservable, delta: f64) -> Result<f64> {
    Ok(mode_component(rho, a, delta)?.trace_norm())
}

/// `‖ρ^(δ)‖₁` for every gap, ascending in δ.
pub fn delta_coherence_profile(rho: &DensityMatrix, a: &HermitianObservable, gaps: &GapSet) -> Result<Vec<(f64, f64)>> {
    Ok(decompose_operator(rho.matrix(), a, gaps)?.iter().map(|m| (m.delta, m.trace_norm())).collect())
}

/// The δ = 0 mode in the computational basis: block-dephasing in the
/// eigenspaces of `A`, which keeps coherence inside degenerate eigenspaces.
pub fn dephase(x: &ComplexMatrix, a: &HermitianObservable, gaps: &GapSet) -> Result<ComplexMatrix> {
    check_dims(x, a)?;
    let inner = a.to_eigenbasis(x);
    Ok(a.from_eigenbasis(&gaps.filter(&inner, gaps.zero_index())))
}

fn check_dims(x: &ComplexMatrix, a: &HermitianObservable) -> Result<()> {
    if x.nrows() != a.dim() || x.ncols() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: x.nrows() });
    }
    Ok(())
}
