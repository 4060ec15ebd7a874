//! Effective-size scores: maximize a measure over sums of local observables.
//!
//! Both the QFI and `I_L` are quadratic forms in the real coefficients of
//! `A = Σ_j v_j B_j`, so the maximization over local unit-norm observables is
//! a quadratic program over a product of spheres. It is solved by block
//! coordinate ascent, each block being an exact trust-region subproblem.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bosonic::{CharacteristicGrid, FockSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, I, ONE, ZERO};
use crate::measures::{derive_seed, evaluate, EvalOptions, MeasureId};
use crate::state::{DensityMatrix, HermitianObservable, PureState, RANK_CUTOFF};

/// Local operators `B_j` acting on one site each, grouped in consecutive
/// blocks of `block_dim` (one block per site).
#[derive(Debug, Clone)]
pub struct LocalBasis {
    dims: Vec<usize>,
    block_dim: usize,
    ops: Vec<(usize, ComplexMatrix)>,
}

impl LocalBasis {
    /// Pauli `(σ^x, σ^y, σ^z)` on each of `n` qubits.
    pub fn pauli(n: usize) -> Self {
        let mut ops = Vec::with_capacity(3 * n);
        for site in 0..n {
            for p in paulis() {
                ops.push((site, p));
            }
        }
        LocalBasis { dims: vec![2; n], block_dim: 3, ops }
    }

    /// `(x_i, p_i)` on each mode.
    pub fn quadratures(fock: &FockSpace) -> Self {
        let f = fock.operators();
        let mut ops = Vec::with_capacity(2 * fock.n_modes());
        for mode in 0..fock.n_modes() {
            ops.push((mode, f.x.clone()));
            ops.push((mode, f.p.clone()));
        }
        LocalBasis { dims: fock.dims(), block_dim: 2, ops }
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn n_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Dense `Σ_j v_j B_j`.
    pub fn combine(&self, v: &[f64]) -> ComplexMatrix {
        let d = self.total_dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for ((site, op), &c) in self.ops.iter().zip(v) {
            if c != 0.0 {
                out += linalg::embed_local(op, *site, &self.dims).scale(c);
            }
        }
        out
    }
}

/// `σ^x, σ^y, σ^z`.
pub fn paulis() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Real symmetric `M` with `f(v) = vᵀ M v` over `n_blocks` blocks of `block_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub block_dim: usize,
    pub n_blocks: usize,
    pub matrix: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(block_dim: usize, n_blocks: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let n = block_dim * n_blocks;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-10 * matrix.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!("quadratic form is not symmetric (defect {asym:.3e})")));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(QuadraticForm { block_dim, n_blocks, matrix })
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        let n = v.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.matrix[(i, j)] * v[j];
            }
            total += v[i] * row;
        }
        total
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigenvalues().min()
    }

    fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let b = self.block_dim;
        self.matrix.view((i * b, j * b), (b, b)).into_owned()
    }
}

/// `A|ψ_a⟩` and `⟨ψ_a|A|ψ_b⟩` for every basis operator on the support of `ρ`.
struct SupportAction {
    values: Vec<f64>,
    ws: Vec<ComplexMatrix>,
    gs: Vec<ComplexMatrix>,
}

impl SupportAction {
    fn new(rho: &DensityMatrix, basis: &LocalBasis) -> Result<Self> {
        if rho.dim() != basis.total_dim() {
            return Err(Error::DimensionMismatch { expected: basis.total_dim(), found: rho.dim() });
        }
        let (values, vectors) = rho.spectrum().support(RANK_CUTOFF);
        let (ws, gs) = basis
            .ops
            .par_iter()
            .map(|(site, op)| {
                let w = linalg::apply_local(op, *site, &basis.dims, &vectors);
                let g = vectors.adjoint() * &w;
                (w, g)
            })
            .unzip();
        Ok(SupportAction { values, ws, gs })
    }

    fn n(&self) -> usize {
        self.ws.len()
    }

    /// `Σ_{a,b} c_ab Re(G_j,ab conj G_k,ab)`.
    fn gram_pair(&self, j: usize, k: usize, c: impl Fn(f64, f64) -> f64) -> f64 {
        let (gj, gk) = (&self.gs[j], &self.gs[k]);
        let r = self.values.len();
        let mut total = 0.0;
        for b in 0..r {
            for a in 0..r {
                let w = c(self.values[a], self.values[b]);
                if w != 0.0 {
                    total += w * (gj[(a, b)] * gk[(a, b)].conj()).re;
                }
            }
        }
        total
    }

    /// `Σ_a f(λ_a) Re⟨A_j ψ_a | A_k ψ_a⟩`.
    fn column_pair(&self, j: usize, k: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (wj, wk) = (&self.ws[j], &self.ws[k]);
        (0..self.values.len()).map(|a| f(self.values[a]) * wj.column(a).dotc(&wk.column(a)).re).sum()
    }

    fn assemble(&self, entry: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
        let n = self.n();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
        let vals: Vec<f64> = pairs.par_iter().map(|&(j, k)| entry(j, k)).collect();
        let mut m = DMatrix::zeros(n, n);
        for ((j, k), v) in pairs.into_iter().zip(vals) {
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
        m
    }

    fn qfi_matrix(&self) -> DMatrix<f64> {
        self.assemble(|j, k| {
            let inside = self.gram_pair(j, k, |la, lb| 2.0 * (la - lb).powi(2) / (la + lb));
            // kernel terms: 4 Σ_a λ_a (⟨W_j,a|W_k,a⟩ − Σ_c G_j,ca* G_k,ca)
            let full = self.column_pair(j, k, |l| l);
            let projected = self.gram_pair(j, k, |_, lb| lb);
            inside + 4.0 * (full - projected)
        })
    }

    fn il_matrix(&self) -> DMatrix<f64> {
        self.assemble(|j, k| self.column_pair(j, k, |l| l * l) - self.gram_pair(j, k, |la, lb| la * lb))
    }
}

/// QFI as a quadratic form: `vᵀ M v = F(ρ, Σ_j v_j B_j)`.
pub fn qfi_quadratic_form(rho: &DensityMatrix, basis: &LocalBasis) -> Result<QuadraticForm> {
    let s = SupportAction::new(rho, basis)?;
    QuadraticForm::new(basis.block_dim, basis.n_blocks(), s.qfi_matrix())
}

/// `I_L` as a quadratic form: `vᵀ M v = I_L(ρ, Σ_j v_j B_j)`.
pub fn il_quadratic_form(rho: &DensityMatrix, basis: &LocalBasis) -> Result<QuadraticForm> {
    let s = SupportAction::new(rho, basis)?;
    QuadraticForm::new(basis.block_dim, basis.n_blocks(), s.il_matrix())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 20, max_sweeps: 200, convergence_tol: 1e-10, seed: 0 }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_sweeps == 0 || !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter("search config fields must be positive".into()));
        }
        Ok(())
    }
}

/// Eigendecomposition of a diagonal block, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct BlockEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl BlockEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let SymmetricEigen { eigenvalues, eigenvectors } = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let values = order.iter().map(|&k| eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eigenvectors[(r, order[c])]);
        BlockEigen { values, vectors }
    }
}

/// Maximizes `vᵀ M v + 2 vᵀ c` over the unit sphere, returning `(v, value)`.
///
/// The maximizer is `v = (λ I − M)^{-1} c` with `λ ≥ μ_max` fixed by `‖v‖ = 1`
/// (secular equation, solved by bisection in the eigenbasis of `M`). When `c`
/// has no component on the top eigenspace and the resulting `v` is shorter
/// than 1, the remainder is filled along the top eigenvector (hard case).
pub fn maximize_on_sphere(eig: &BlockEigen, c: &[f64]) -> (Vec<f64>, f64) {
    let b = c.len();
    let mu = &eig.values;
    let q = &eig.vectors;
    let g: Vec<f64> = (0..b).map(|k| (0..b).map(|r| q[(r, k)] * c[r]).sum()).collect();
    let c_norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = mu[0].abs().max(c_norm).max(1.0);
    let top: Vec<bool> = mu.iter().map(|&m| m >= mu[0] - 1e-12 * scale).collect();
    let g_top: f64 = (0..b).filter(|&k| top[k]).map(|k| g[k] * g[k]).sum::<f64>().sqrt();

    let mut coeffs = vec![0.0; b];
    let mut hard = false;
    if g_top <= 1e-14 * scale {
        let mut len2 = 0.0;
        for k in (0..b).filter(|&k| !top[k]) {
            coeffs[k] = g[k] / (mu[0] - mu[k]);
            len2 += coeffs[k] * coeffs[k];
        }
        if len2 <= 1.0 {
            coeffs[top.iter().position(|&t| t).expect("nonempty top")] = (1.0 - len2).sqrt();
            hard = true;
        }
    }
    if !hard {
        let phi = |lambda: f64| (0..b).map(|k| (g[k] / (lambda - mu[k])).powi(2)).sum::<f64>();
        let (mut lo, mut hi) = (mu[0], mu[0] + c_norm);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = hi;
        for k in 0..b {
            coeffs[k] = g[k] / (lambda - mu[k]);
        }
    }
    let mut v: Vec<f64> = (0..b).map(|r| (0..b).map(|k| q[(r, k)] * coeffs[k]).sum()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let value = (0..b)
        .map(|k| {
            let proj: f64 = (0..b).map(|r| q[(r, k)] * v[r]).sum();
            mu[k] * proj * proj
        })
        .sum::<f64>()
        + 2.0 * v.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    (v, value)
}

/// Result of one block-ascent run.
#[derive(Debug, Clone)]
pub struct AscentRun {
    pub vector: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after every block update.
    pub history: Vec<f64>,
}

/// Block coordinate ascent from `init` (each block must be a unit vector).
pub fn block_ascent(form: &QuadraticForm, init: Vec<f64>, max_sweeps: usize, tol: f64) -> AscentRun {
    let b = form.block_dim;
    let nb = form.n_blocks;
    let eigs: Vec<BlockEigen> = (0..nb).map(|i| BlockEigen::new(&form.block(i, i))).collect();
    let mut v = init;
    let mut objective = form.value(&v);
    let mut history = vec![objective];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let start = objective;
        for i in 0..nb {
            let c: Vec<f64> = (0..b)
                .map(|mu| {
                    let row = i * b + mu;
                    (0..nb * b).filter(|col| col / b != i).map(|col| form.matrix[(row, col)] * v[col]).sum()
                })
                .collect();
            let current: f64 = {
                let vi = &v[i * b..(i + 1) * b];
                let quad: f64 = (0..b)
                    .map(|r| (0..b).map(|s| vi[r] * form.matrix[(i * b + r, i * b + s)] * vi[s]).sum::<f64>())
                    .sum();
                quad + 2.0 * vi.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>()
            };
            let (vi, value) = maximize_on_sphere(&eigs[i], &c);
            if value > current {
                v[i * b..(i + 1) * b].copy_from_slice(&vi);
                objective = form.value(&v);
            }
            history.push(objective);
        }
        if objective - start < tol {
            converged = true;
            break;
        }
    }
    AscentRun { vector: v, objective, sweeps, converged, history }
}

fn random_blocks(rng: &mut ChaCha8Rng, block_dim: usize, n_blocks: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(block_dim * n_blocks);
    for _ in 0..n_blocks {
        let mut block: Vec<f64> = (0..block_dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        block.iter_mut().for_each(|x| *x /= norm);
        v.extend(block);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub method: String,
    pub restarts: usize,
    pub best_restart: usize,
    pub sweeps: usize,
    pub converged: bool,
    /// Maximized form value (`F` or `I_L`, before dividing by the size).
    pub objective: f64,
}

/// Maximizes a quadratic form over products of unit spheres with random restarts.
///
/// Ties within `1e-12` relative are broken towards the lexicographically
/// smallest vector, so the result does not depend on scheduling.
pub fn maximize_form(form: &QuadraticForm, cfg: &SearchConfig) -> Result<(Vec<f64>, OptimizerDiagnostics)> {
    cfg.validate()?;
    let runs: Vec<AscentRun> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r as u64));
            let init = random_blocks(&mut rng, form.block_dim, form.n_blocks);
            block_ascent(form, init, cfg.max_sweeps, cfg.convergence_tol)
        })
        .collect();
    let top = runs.iter().map(|r| r.objective).fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * top.abs().max(1.0);
    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.objective >= top - slack)
        .min_by(|a, b| lexicographic(&a.1.vector, &b.1.vector))
        .expect("at least one restart");
    let diag = OptimizerDiagnostics {
        method: "block coordinate ascent".into(),
        restarts: cfg.restarts,
        best_restart,
        sweeps: best.sweeps,
        converged: best.converged,
        objective: best.objective,
    };
    Ok((best.vector.clone(), diag))
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Local qubit observable `A = Σ_i n_i · σ_i` with unit Bloch vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalObservableFamily {
    pub n_sites: usize,
    pub bloch_vectors: Vec<[f64; 3]>,
}

impl LocalObservableFamily {
    pub fn new(bloch_vectors: Vec<[f64; 3]>) -> Result<Self> {
        for n in &bloch_vectors {
            let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!("Bloch vector {n:?} has norm {norm}")));
            }
        }
        Ok(LocalObservableFamily { n_sites: bloch_vectors.len(), bloch_vectors })
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.bloch_vectors.iter().flatten().copied().collect()
    }

    /// Dense `Σ_i n_i · σ_i` on `2^N` dimensions.
    pub fn observable(&self) -> Result<HermitianObservable> {
        HermitianObservable::new(LocalBasis::pauli(self.n_sites).combine(&self.coefficients()))
    }
}

/// Quadrature sum `x^θ = Σ_i cos θ_i x_i + sin θ_i p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureFamily {
    pub n_modes: usize,
    pub angles: Vec<f64>,
    pub fock_dim: usize,
}

impl QuadratureFamily {
    pub fn new(angles: Vec<f64>, fock_dim: usize) -> Self {
        let tau = std::f64::consts::TAU;
        let angles: Vec<f64> = angles.into_iter().map(|t| t.rem_euclid(tau)).collect();
        QuadratureFamily { n_modes: angles.len(), angles, fock_dim }
    }

    fn from_coefficients(v: &[f64], fock_dim: usize) -> Self {
        QuadratureFamily::new(v.chunks(2).map(|c| c[1].atan2(c[0])).collect(), fock_dim)
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|t| [t.cos(), t.sin()]).collect()
    }

    pub fn observable(&self, fock: &FockSpace) -> Result<HermitianObservable> {
        HermitianObservable::new(LocalBasis::quadratures(fock).combine(&self.coefficients()))
    }
}

/// Result of an effective-size maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum<F> {
    pub value: f64,
    pub family: F,
    pub optimizer: OptimizerDiagnostics,
}

/// Number of qubits `N` with `dim = 2^N`.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `N_F = max_A F(ρ, A) / 4N` over `A = Σ_i n_i·σ_i` with unit Bloch vectors.
pub fn nf_qubits(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<Optimum<LocalObservableFamily>> {
    let n = qubit_count(rho.dim())?;
    let form = qfi_quadratic_form(rho, &LocalBasis::pauli(n))?;
    let (v, optimizer) = maximize_form(&form, cfg)?;
    let family = LocalObservableFamily { n_sites: n, bloch_vectors: v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect() };
    Ok(Optimum { value: (optimizer.objective / (4.0 * n as f64)).clamp(0.0, n as f64), family, optimizer })
}

/// `max_θ F(ρ, x^θ) / 4N` over quadrature sums.
pub fn nf_quadratures(rho: &DensityMatrix, fock: &FockSpace, cfg: &SearchConfig) -> Result<Optimum<QuadratureFamily>> {
    fock.check_truncation(rho)?;
    let form = qfi_quadratic_form(rho, &LocalBasis::quadratures(fock))?;
    let (v, optimizer) = maximize_form(&form, cfg)?;
    let family = QuadratureFamily::from_coefficients(&v, fock.dim_per_mode());
    Ok(Optimum { value: (optimizer.objective / (4.0 * fock.n_modes() as f64)).max(0.0), family, optimizer })
}

/// Refined measure `max_θ I_L(ρ, x^θ) / N`.
pub fn nlj_tilde(rho: &DensityMatrix, fock: &FockSpace, cfg: &SearchConfig) -> Result<Optimum<QuadratureFamily>> {
    fock.check_truncation(rho)?;
    let form = il_quadratic_form(rho, &LocalBasis::quadratures(fock))?;
    let (v, optimizer) = maximize_form(&form, cfg)?;
    let family = QuadratureFamily::from_coefficients(&v, fock.dim_per_mode());
    Ok(Optimum { value: (optimizer.objective / fock.n_modes() as f64).max(0.0), family, optimizer })
}

/// `N_LJ = ½ Σ_i I_L(ρ, x_i) + I_L(ρ, p_i)`.
pub fn nlj_closed_form(rho: &DensityMatrix, fock: &FockSpace) -> Result<f64> {
    fock.check_truncation(rho)?;
    let form = il_quadratic_form(rho, &LocalBasis::quadratures(fock))?;
    Ok(0.5 * form.matrix.trace().max(0.0))
}

/// Quadrature settings for [`nlj_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NljGrid {
    pub radius: f64,
    pub points_per_axis: usize,
    pub tail_tolerance: f64,
}

impl Default for NljGrid {
    fn default() -> Self {
        NljGrid { radius: 7.0, points_per_axis: 80, tail_tolerance: 1e-4 }
    }
}

/// Value of the phase-space integral with its tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NljIntegral {
    pub value: f64,
    pub tail_estimate: f64,
    pub grid: NljGrid,
}

/// `N_LJ = (1/2π) ∫ d²α |α|² |χ_ρ(α)|²` for one mode, by tensor Gauss–Legendre
/// quadrature on `[−R, R]²`.
///
/// The tail outside the disk of radius `R` is estimated as `m (R² + 1)/2`,
/// where `m` is the largest `|χ|²` on the circle `|α| = R`; this is exact for
/// a Gaussian `|χ|² ∝ e^{−|α|²}`.
pub fn nlj_integral(rho: &DensityMatrix, fock: &FockSpace, grid: &NljGrid) -> Result<NljIntegral> {
    if fock.n_modes() != 1 {
        return Err(Error::InvalidParameter("the phase-space integral is implemented for one mode".into()));
    }
    if !(grid.radius > 0.0) || grid.points_per_axis < 2 || !(grid.tail_tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid quadrature grid {grid:?}")));
    }
    fock.check_truncation(rho)?;
    let r = grid.radius;
    let chi = CharacteristicGrid::new(rho, r * std::f64::consts::SQRT_2)?;

    let ring = 64;
    let m = (0..ring)
        .map(|k| chi.eval(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / ring as f64)).norm_sqr())
        .fold(0.0, f64::max);
    let tail_estimate = m * (r * r + 1.0) / 2.0;
    if tail_estimate > grid.tail_tolerance {
        return Err(Error::TailBound { tail: tail_estimate, tolerance: grid.tail_tolerance, radius: r });
    }

    let gl = gauss_quad::GaussLegendre::new(grid.points_per_axis)
        .map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre rule: {e}")))?;
    let nodes: Vec<(f64, f64)> = gl.as_node_weight_pairs().iter().map(|(x, w)| (r * x, r * w)).collect();
    let total: f64 = nodes
        .par_iter()
        .map(|&(u, wu)| {
            nodes
                .iter()
                .map(|&(v, wv)| {
                    let alpha = Complex64::new(u, v);
                    wu * wv * alpha.norm_sqr() * chi.eval(alpha).norm_sqr()
                })
                .sum::<f64>()
        })
        .sum();
    Ok(NljIntegral { value: total / std::f64::consts::TAU, tail_estimate, grid: *grid })
}

/// Ordering of a measure on two equal-weight superpositions of eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Greater,
    Equal,
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M4Verdict {
    pub measure_id: MeasureId,
    pub value_wide: f64,
    pub value_narrow: f64,
    pub ordering: Ordering,
}

/// Compares a measure on `(|a_i⟩+|a_j⟩)/√2` and `(|a_k⟩+|a_l⟩)/√2`, where
/// `|a_i − a_j| > |a_k − a_l|`. Values within `1e-9` relative count as equal.
pub fn m4_ordering_check(
    measure: MeasureId,
    a: &HermitianObservable,
    wide: (usize, usize),
    narrow: (usize, usize),
) -> Result<M4Verdict> {
    let eig = a.eigen();
    let d = a.dim();
    for &i in [wide.0, wide.1, narrow.0, narrow.1].iter() {
        if i >= d {
            return Err(Error::InvalidParameter(format!("index {i} out of range for dimension {d}")));
        }
    }
    if wide.0 == wide.1 || narrow.0 == narrow.1 {
        return Err(Error::InvalidParameter("superposition needs two distinct eigenvectors".into()));
    }
    let gap = |(i, j): (usize, usize)| (eig.values[i] - eig.values[j]).abs();
    if gap(wide) < gap(narrow) {
        return Err(Error::InvalidParameter(format!(
            "first pair must have the larger gap ({} < {})",
            gap(wide),
            gap(narrow)
        )));
    }
    let state = |(i, j): (usize, usize)| -> Result<DensityMatrix> {
        let psi = PureState::equal_superposition(d, i, j)?;
        let amps = match eig.basis {
            None => psi.amplitudes().clone(),
            Some(u) => u * psi.amplitudes(),
        };
        Ok(PureState::new(amps)?.density())
    };
    let opts = EvalOptions::default();
    let value_wide = evaluate(measure, &state(wide)?, a, &opts)?.value;
    let value_narrow = evaluate(measure, &state(narrow)?, a, &opts)?.value;
    let ordering = if (value_wide - value_narrow).abs() <= 1e-9 * value_wide.abs().max(value_narrow.abs()).max(1.0) {
        Ordering::Equal
    } else if value_wide > value_narrow {
        Ordering::Greater
    } else {
        Ordering::Less
    };
    Ok(M4Verdict { measure_id: measure, value_wide, value_narrow, ordering })
}

/// Unit vectors on a polar grid with the given angular step (poles once).
pub fn sphere_grid(step_deg: f64) -> Vec<[f64; 3]> {
    let steps = (180.0 / step_deg).round() as usize;
    let mut points = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    for t in 1..steps {
        let theta = (t as f64 * step_deg).to_radians();
        for p in 0..(2 * steps) {
            let phi = (p as f64 * step_deg).to_radians();
            points.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    points
}

/// Brute-force maximum of a Bloch-block form: grid directions on every site
/// but the last, whose block is solved exactly. With `symmetric`, only
/// non-decreasing grid index tuples are visited, which is exhaustive for forms
/// invariant under site permutations.
pub fn grid_search_oracle(form: &QuadraticForm, step_deg: f64, symmetric: bool) -> (f64, Vec<f64>) {
    assert_eq!(form.block_dim, 3, "grid oracle expects Bloch blocks");
    let nb = form.n_blocks;
    let grid = sphere_grid(step_deg);
    let g = grid.len();
    let last = nb - 1;
    let last_eig = BlockEigen::new(&form.block(last, last));
    // coupling of each grid point at site i to the last block: M_{i,last}ᵀ n
    let coupling: Vec<Vec<[f64; 3]>> = (0..last)
        .map(|i| {
            let m = form.block(i, last);
            grid.iter()
                .map(|n| {
                    let mut out = [0.0; 3];
                    for (s, o) in out.iter_mut().enumerate() {
                        *o = (0..3).map(|r| m[(r, s)] * n[r]).sum();
                    }
                    out
                })
                .collect()
        })
        .collect();
    let pair_value = |i: usize, j: usize, a: &[f64; 3], b: &[f64; 3]| -> f64 {
        let m = form.block(i, j);
        (0..3).map(|r| (0..3).map(|s| a[r] * m[(r, s)] * b[s]).sum::<f64>()).sum()
    };

    let mut tuples: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..last.saturating_sub(1) {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                let start = if symmetric { t.last().copied().unwrap_or(0) } else { 0 };
                (start..g).map(move |k| {
                    let mut u = t.clone();
                    u.push(k);
                    u
                })
            })
            .collect();
    }
    let evaluate_prefix = |prefix: &[usize]| -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, vec![]);
        let start = if symmetric { prefix.last().copied().unwrap_or(0) } else { 0 };
        let first = if last == 0 { 0..1 } else { start..g };
        for k in first {
            let mut idx = prefix.to_vec();
            if last > 0 {
                idx.push(k);
            }
            let mut fixed = 0.0;
            let mut c = [0.0; 3];
            for (i, &gi) in idx.iter().enumerate() {
                for (j, &gj) in idx.iter().enumerate() {
                    fixed += pair_value(i, j, &grid[gi], &grid[gj]);
                }
                for s in 0..3 {
                    c[s] += coupling[i][gi][s];
                }
            }
            let (v, val) = maximize_on_sphere(&last_eig, &c);
            if fixed + val > best.0 {
                let mut full: Vec<f64> = idx.iter().flat_map(|&gi| grid[gi]).collect();
                full.extend(v);
                best = (fixed + val, full);
            }
        }
        best
    };
    tuples
        .par_iter()
        .map(|t| evaluate_prefix(t))
        .reduce(|| (f64::NEG_INFINITY, vec![]), |a, b| if b.0 > a.0 { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bosonic::{standard_state, StateRecipe, DEFAULT_FOCK_DIM};
    use crate::measures::{il_measure, qfi};
    use crate::state::{random_density, random_pure_state, tensor_states};
    use proptest::prelude::*;

    fn ghz(n: usize) -> DensityMatrix {
        PureState::equal_superposition(1 << n, 0, (1 << n) - 1).unwrap().density()
    }

    fn quick() -> SearchConfig {
        SearchConfig { restarts: 8, ..SearchConfig::default() }
    }

    #[test]
    fn qfi_form_examples() {
        let plus = PureState::equal_superposition(2, 0, 1).unwrap().density();
        let form = qfi_quadratic_form(&plus, &LocalBasis::pauli(1)).unwrap();
        // Bloch vector along x: F = 4 for y and z, 0 along x
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 4.0, 4.0]));
        assert!((&form.matrix - expect).amax() < 1e-12);
        assert!((form.value(&[0.0, 0.0, 1.0]) - qfi(&plus, &HermitianObservable::pauli_z()).unwrap()).abs() < 1e-12);
        let mixed = qfi_quadratic_form(&DensityMatrix::maximally_mixed(4), &LocalBasis::pauli(2)).unwrap();
        assert!(mixed.matrix.amax() < 1e-14);
    }

    #[test]
    fn forms_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..10u64 {
            let rho = random_density(4, 1 + seed as usize % 4, seed).unwrap();
            let basis = LocalBasis::pauli(2);
            let qf = qfi_quadratic_form(&rho, &basis).unwrap();
            let lf = il_quadratic_form(&rho, &basis).unwrap();
            assert!(qf.min_eigenvalue() >= -1e-9 && lf.min_eigenvalue() >= -1e-9);
            let v: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
            let a = HermitianObservable::new(basis.combine(&v)).unwrap();
            assert!((qf.value(&v) - qfi(&rho, &a).unwrap()).abs() < 1e-8);
            assert!((lf.value(&v) - il_measure(&rho, &a).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_solver_hard_case() {
        // M = diag(2, 1, 0) and c orthogonal to the top direction
        let eig = BlockEigen::new(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 0.0])));
        let (v, val) = maximize_on_sphere(&eig, &[0.0, 0.5, 0.0]);
        // stationary with λ = 2: v_y = 0.5, v_x = √0.75
        assert!((v[1] - 0.5).abs() < 1e-12 && (v[0].abs() - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((val - (2.0 * 0.75 + 0.25 + 0.5)).abs() < 1e-12);
        let (v, val) = maximize_on_sphere(&eig, &[0.0, 0.0, 0.0]);
        assert!((v[0].abs() - 1.0).abs() < 1e-12 && (val - 2.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sphere_solver_beats_random_points(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = 2 + (seed % 2) as usize;
            let g = DMatrix::<f64>::from_fn(b, b, |_, _| StandardNormal.sample(&mut rng));
            let m = &g * g.transpose();
            let c: Vec<f64> = (0..b).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (v, val) = maximize_on_sphere(&BlockEigen::new(&m), &c);
            let f = |x: &[f64]| -> f64 {
                let mut t = 0.0;
                for i in 0..b { for j in 0..b { t += x[i] * m[(i, j)] * x[j]; } t += 2.0 * x[i] * c[i]; }
                t
            };
            prop_assert!((f(&v) - val).abs() < 1e-9 * val.abs().max(1.0));
            for _ in 0..200 {
                let p = random_blocks(&mut rng, b, 1);
                prop_assert!(f(&p) <= val + 1e-9 * val.abs().max(1.0));
            }
        }
    }

    #[test]
    fn ascent_is_monotone() {
        let rho = random_density(8, 3, 4).unwrap();
        let form = qfi_quadratic_form(&rho, &LocalBasis::pauli(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = block_ascent(&form, random_blocks(&mut rng, 3, 3), 200, 1e-10);
        assert!(run.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!((run.objective - form.value(&run.vector)).abs() < 1e-10);
    }

    #[test]
    fn nf_qubit_examples() {
        let r = nf_qubits(&ghz(3), &quick()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-6, "{}", r.value);
        let a = r.family.observable().unwrap();
        assert!((qfi(&ghz(3), &a).unwrap() - r.optimizer.objective).abs() < 1e-8);
        for n in r.family.bloch_vectors {
            assert!(n[2].abs() > 1.0 - 1e-6, "{n:?}");
        }

        let plus = PureState::equal_superposition(2, 0, 1).unwrap().density();
        let mut product = plus.clone();
        for _ in 1..3 {
            product = tensor_states(&product, &plus).unwrap();
        }
        assert!((nf_qubits(&product, &quick()).unwrap().value - 1.0).abs() < 1e-6);
        assert!(nf_qubits(&DensityMatrix::maximally_mixed(8), &quick()).unwrap().value.abs() < 1e-12);
        assert!(nf_qubits(&DensityMatrix::maximally_mixed(6), &quick()).is_err());
    }

    #[test]
    fn nf_qubits_is_bounded_and_deterministic() {
        for seed in 0..5u64 {
            let rho = random_density(8, 2, seed).unwrap();
            let cfg = SearchConfig { seed, ..quick() };
            let a = nf_qubits(&rho, &cfg).unwrap();
            assert!(a.value >= 0.0 && a.value <= 3.0);
            assert_eq!(a, nf_qubits(&rho, &cfg).unwrap());
        }
    }

    #[test]
    fn grid_oracle_matches_ascent_on_small_ghz() {
        for n in 1..=3 {
            let form = qfi_quadratic_form(&ghz(n), &LocalBasis::pauli(n)).unwrap();
            let (grid_best, _) = grid_search_oracle(&form, 10.0, true);
            let ascent = nf_qubits(&ghz(n), &quick()).unwrap();
            assert!((grid_best / (4.0 * n as f64) - ascent.value).abs() < 1e-6, "n = {n}");
        }
    }

    #[test]
    fn grid_oracle_is_exhaustive_without_symmetry() {
        let rho = random_density(4, 2, 7).unwrap();
        let form = qfi_quadratic_form(&rho, &LocalBasis::pauli(2)).unwrap();
        let (grid_best, v) = grid_search_oracle(&form, 10.0, false);
        assert!((form.value(&v) - grid_best).abs() < 1e-9);
        let ascent = nf_qubits(&rho, &quick()).unwrap();
        assert!(grid_best <= ascent.optimizer.objective + 1e-9);
        assert!(ascent.optimizer.objective - grid_best < 0.05 * grid_best);
    }

    #[test]
    fn coherent_and_vacuum_quadrature_size() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        for alpha in [Complex64::new(0.0, 0.0), Complex64::new(1.5, -1.0)] {
            let psi = standard_state(&StateRecipe::Coherent { alpha }, &fock).unwrap().density();
            let r = nf_quadratures(&psi, &fock, &quick()).unwrap();
            assert!((r.value - 0.5).abs() < 1e-4, "{}", r.value);
        }
    }

    #[test]
    fn cat_state_quadrature_size_matches_dense_dispersion() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        let cat = standard_state(&StateRecipe::Cat { alpha: Complex64::new(2.0, 0.0) }, &fock).unwrap();
        let r = nf_quadratures(&cat.density(), &fock, &quick()).unwrap();
        // dense maximum of V(x^θ) over a fine angle scan
        let ops = fock.operators();
        let v = cat.amplitudes();
        let dense = (0..720)
            .map(|k| {
                let q = ops.quadrature(k as f64 * std::f64::consts::PI / 720.0);
                let m = v.dotc(&(&q * v)).re;
                v.dotc(&(&q * (&q * v))).re - m * m
            })
            .fold(0.0, f64::max);
        assert!((r.value - dense).abs() < 1e-8, "{} vs {dense}", r.value);
        // even cat: V(x) = α²(1 + tanh α²) + 1/2, well above ⟨n⟩ = α² tanh α²
        let x2 = 4.0f64;
        assert!((dense - (x2 * (1.0 + x2.tanh()) + 0.5)).abs() < 1e-6);
    }

    #[test]
    fn nlj_closed_form_examples() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        for n in 0..4 {
            let psi = PureState::basis(DEFAULT_FOCK_DIM, n).density();
            assert!((nlj_closed_form(&psi, &fock).unwrap() - (n as f64 + 0.5)).abs() < 1e-12);
        }
        let two = FockSpace::new(2, 12).unwrap();
        let small = FockSpace::single_mode(12).unwrap();
        let healthy = |seed: u64, rank: usize| {
            let mut m = ComplexMatrix::zeros(12, 12);
            let mut weights = vec![];
            for k in 0..rank {
                let psi = random_pure_state(10, seed + k as u64);
                let w = (k + 1) as f64;
                m += psi.projector().resize(12, 12, ZERO).scale(w);
                weights.push(w);
            }
            m /= Complex64::new(weights.iter().sum::<f64>(), 0.0);
            DensityMatrix::from_matrix(m).unwrap()
        };
        // pure factors: plain additivity
        let (rho, sigma) = (healthy(1, 1), healthy(2, 1));
        let joint = nlj_closed_form(&tensor_states(&rho, &sigma).unwrap(), &two).unwrap();
        let sum = nlj_closed_form(&rho, &small).unwrap() + nlj_closed_form(&sigma, &small).unwrap();
        assert!((joint - sum).abs() < 1e-9, "{joint} vs {sum}");
        // mixed factors: each mode's term picks up the purity of the other
        let (rho, sigma) = (healthy(3, 2), healthy(5, 3));
        let joint = nlj_closed_form(&tensor_states(&rho, &sigma).unwrap(), &two).unwrap();
        let weighted = nlj_closed_form(&rho, &small).unwrap() * sigma.purity()
            + nlj_closed_form(&sigma, &small).unwrap() * rho.purity();
        assert!((joint - weighted).abs() < 1e-9, "{joint} vs {weighted}");
    }

    #[test]
    fn nlj_integral_matches_closed_form() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        let states = [
            PureState::basis(40, 0),
            PureState::basis(40, 1),
            standard_state(&StateRecipe::Coherent { alpha: Complex64::new(1.0, 0.0) }, &fock).unwrap(),
            standard_state(&StateRecipe::Cat { alpha: Complex64::new(1.5, 0.0) }, &fock).unwrap(),
        ];
        for psi in states {
            let rho = psi.density();
            let exact = nlj_closed_form(&rho, &fock).unwrap();
            let integral = nlj_integral(&rho, &fock, &NljGrid::default()).unwrap();
            assert!((integral.value - exact).abs() <= 1e-3f64.max(1e-2 * exact), "{} vs {exact}", integral.value);
        }
    }

    #[test]
    fn nlj_integral_reports_tail_violation() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        let psi = PureState::basis(40, 4).density();
        let grid = NljGrid { radius: 2.0, ..NljGrid::default() };
        assert!(matches!(nlj_integral(&psi, &fock, &grid), Err(Error::TailBound { .. })));
    }

    #[test]
    fn nlj_tilde_examples() {
        let fock = FockSpace::single_mode(DEFAULT_FOCK_DIM).unwrap();
        let sq = standard_state(&StateRecipe::Squeezed { xi: Complex64::new(0.6, 0.0), alpha: ZERO }, &fock).unwrap();
        let rho = sq.density();
        let t = nlj_tilde(&rho, &fock, &quick()).unwrap();
        let f = nf_quadratures(&rho, &fock, &quick()).unwrap();
        assert!((t.value - f.value).abs() < 1e-8);

        // I/d commutes with everything, but it fills the edge levels and is rejected
        let flat = DensityMatrix::maximally_mixed(40);
        assert!(il_quadratic_form(&flat, &LocalBasis::quadratures(&fock)).unwrap().matrix.amax() < 1e-12);
        assert!(matches!(nlj_tilde(&flat, &fock, &quick()), Err(Error::Truncation { .. })));

        for seed in 0..5u64 {
            let a = random_pure_state(20, seed);
            let b = random_pure_state(20, seed + 10);
            let mut m = a.projector().scale(0.7) + b.projector().scale(0.3);
            m = m.resize(40, 40, ZERO);
            let rho = DensityMatrix::from_matrix(m).unwrap();
            let t = nlj_tilde(&rho, &fock, &quick()).unwrap().value;
            let f = nf_quadratures(&rho, &fock, &quick()).unwrap().value;
            assert!(t <= f + 1e-9);
        }
    }

    #[test]
    fn truncation_failure_is_reported() {
        let fock = FockSpace::single_mode(10).unwrap();
        let edge = PureState::basis(10, 9).density();
        assert!(matches!(nf_quadratures(&edge, &fock, &quick()), Err(Error::Truncation { .. })));
        assert!(matches!(nlj_closed_form(&edge, &fock), Err(Error::Truncation { .. })));
    }

    #[test]
    fn m4_examples() {
        let a = HermitianObservable::diagonal(vec![0.0, 1.0, 2.0, 3.0]);
        for id in [MeasureId::Qfi, MeasureId::Variance, MeasureId::Skew] {
            assert_eq!(m4_ordering_check(id, &a, (0, 3), (0, 1)).unwrap().ordering, Ordering::Greater);
        }
        assert_eq!(m4_ordering_check(MeasureId::RelEnt, &a, (0, 3), (0, 1)).unwrap().ordering, Ordering::Equal);
        assert_eq!(m4_ordering_check(MeasureId::Qfi, &a, (0, 1), (2, 3)).unwrap().ordering, Ordering::Equal);
        assert!(m4_ordering_check(MeasureId::Qfi, &a, (0, 1), (0, 3)).is_err());
        assert!(m4_ordering_check(MeasureId::Qfi, &a, (0, 4), (0, 1)).is_err());
    }

    #[test]
    fn quadrature_family_reduces_angles() {
        let f = QuadratureFamily::new(vec![-0.5, 7.0], 10);
        assert!(f.angles.iter().all(|&t| (0.0..std::f64::consts::TAU).contains(&t)));
    }
}
