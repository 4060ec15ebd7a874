//! Truncated Fock spaces: ladder and quadrature operators, standard states,
//! displacements and the characteristic function.
//!
//! Conventions: `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so `[x, p] = i`
//! away from the top level and `V(|α⟩, x) = 1/2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, DEFAULT_DIM_CAP, I, ZERO};
use crate::state::{DensityMatrix, PureState};

pub const DEFAULT_FOCK_DIM: usize = 40;

/// Largest weight a state may put on the top two Fock levels of any mode.
pub const TRUNCATION_BOUND: f64 = 1e-6;

/// Single-mode operators on a truncated space.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub a: ComplexMatrix,
    pub a_dag: ComplexMatrix,
    pub x: ComplexMatrix,
    pub p: ComplexMatrix,
}

impl FockOperators {
    fn new(dim: usize) -> Self {
        let a = ladder(dim);
        let a_dag = a.adjoint();
        let x = (&a + &a_dag).scale(FRAC_1_SQRT_2);
        let p = (&a - &a_dag) * Complex64::new(0.0, -FRAC_1_SQRT_2);
        FockOperators { a, a_dag, x, p }
    }

    /// `x(θ) = cos θ x + sin θ p`.
    pub fn quadrature(&self, theta: f64) -> ComplexMatrix {
        self.x.scale(theta.cos()) + self.p.scale(theta.sin())
    }

    pub fn number(&self) -> ComplexMatrix {
        &self.a_dag * &self.a
    }
}

/// `a` with `√n` on the first superdiagonal.
pub fn ladder(dim: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `n_modes` bosonic modes, each truncated to `dim_per_mode` levels.
#[derive(Debug)]
pub struct FockSpace {
    n_modes: usize,
    dim_per_mode: usize,
    ops: OnceLock<FockOperators>,
}

impl Clone for FockSpace {
    fn clone(&self) -> Self {
        FockSpace { n_modes: self.n_modes, dim_per_mode: self.dim_per_mode, ops: self.ops.clone() }
    }
}

impl FockSpace {
    pub fn new(n_modes: usize, dim_per_mode: usize) -> Result<Self> {
        if n_modes == 0 || dim_per_mode < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least one mode and two levels per mode, got {n_modes} modes of dimension {dim_per_mode}"
            )));
        }
        let total = (dim_per_mode as u128).checked_pow(n_modes as u32).unwrap_or(u128::MAX);
        if total > DEFAULT_DIM_CAP as u128 {
            return Err(Error::ResourceLimit { dim: total.min(usize::MAX as u128) as usize, cap: DEFAULT_DIM_CAP });
        }
        Ok(FockSpace { n_modes, dim_per_mode, ops: OnceLock::new() })
    }

    pub fn single_mode(dim: usize) -> Result<Self> {
        FockSpace::new(1, dim)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim_per_mode
    }

    pub fn total_dim(&self) -> usize {
        self.dim_per_mode.pow(self.n_modes as u32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.dim_per_mode; self.n_modes]
    }

    /// Single-mode operators, built once.
    pub fn operators(&self) -> &FockOperators {
        self.ops.get_or_init(|| FockOperators::new(self.dim_per_mode))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::InvalidParameter(format!("mode {mode} out of range for {} modes", self.n_modes)));
        }
        Ok(())
    }

    /// `x_i(θ)` embedded in the full space.
    pub fn mode_quadrature(&self, mode: usize, theta: f64) -> Result<ComplexMatrix> {
        self.check_mode(mode)?;
        Ok(linalg::embed_local(&self.operators().quadrature(theta), mode, &self.dims()))
    }

    pub fn mode_x(&self, mode: usize) -> Result<ComplexMatrix> {
        self.mode_quadrature(mode, 0.0)
    }

    pub fn mode_p(&self, mode: usize) -> Result<ComplexMatrix> {
        self.mode_quadrature(mode, std::f64::consts::FRAC_PI_2)
    }

    fn check_state_dim(&self, dim: usize) -> Result<()> {
        if dim != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), found: dim });
        }
        Ok(())
    }

    /// Weight of `ρ` on the top two Fock levels of each mode.
    pub fn edge_weights(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_state_dim(rho.dim())?;
        let d = self.dim_per_mode;
        let m = rho.matrix();
        let mut weights = vec![0.0; self.n_modes];
        for idx in 0..self.total_dim() {
            let diag = m[(idx, idx)].re;
            let mut rest = idx;
            for mode in (0..self.n_modes).rev() {
                if rest % d >= d - 2 {
                    weights[mode] += diag;
                }
                rest /= d;
            }
        }
        Ok(weights)
    }

    /// Fails when some mode puts more than [`TRUNCATION_BOUND`] on its top two levels.
    pub fn check_truncation(&self, rho: &DensityMatrix) -> Result<()> {
        for (mode, weight) in self.edge_weights(rho)?.into_iter().enumerate() {
            if weight > TRUNCATION_BOUND {
                return Err(Error::Truncation { mode, weight, bound: TRUNCATION_BOUND, dim: self.dim_per_mode });
            }
        }
        Ok(())
    }
}

/// Single-mode ladder/quadrature operators of a Fock space.
pub fn fock_operators(fock: &FockSpace) -> &FockOperators {
    fock.operators()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateRecipe {
    Number {
        n: usize,
    },
    Coherent {
        alpha: Complex64,
    },
    /// Normalized `|α⟩ + |−α⟩`.
    Cat {
        alpha: Complex64,
    },
    /// `exp((ξ* a² − ξ a†²)/2) |α⟩`.
    Squeezed {
        xi: Complex64,
        alpha: Complex64,
    },
}

impl StateRecipe {
    /// Mean photon number of the ideal untruncated state (cat: the larger of its components).
    pub fn mean_photons(&self) -> f64 {
        match *self {
            StateRecipe::Number { n } => n as f64,
            StateRecipe::Coherent { alpha } | StateRecipe::Cat { alpha } => alpha.norm_sqr(),
            StateRecipe::Squeezed { xi, alpha } => {
                let r = xi.norm();
                // ⟨n⟩ of S(ξ)|α⟩ is bounded by |α|² e^{2r} + sinh² r
                alpha.norm_sqr() * (2.0 * r).exp() + r.sinh().powi(2)
            }
        }
    }

    /// `n̄ + 4√n̄ ≤ d` (for coherent and cat states: `|α|² + 4|α| ≤ d`); number states need `n < d − 2`.
    pub fn check_health(&self, dim: usize) -> Result<()> {
        let ok = match *self {
            StateRecipe::Number { n } => n + 2 < dim,
            _ => {
                let nbar = self.mean_photons();
                nbar + 4.0 * nbar.sqrt() <= dim as f64
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{self:?} violates the truncation-health bound for Fock dimension {dim}; increase the Fock dimension"
            )))
        }
    }
}

/// Builds a single-mode standard state on `fock` (which must have one mode).
pub fn standard_state(recipe: &StateRecipe, fock: &FockSpace) -> Result<PureState> {
    if fock.n_modes() != 1 {
        return Err(Error::InvalidParameter("standard states are single-mode".into()));
    }
    let d = fock.dim_per_mode();
    recipe.check_health(d)?;
    let (full, dim) = match *recipe {
        StateRecipe::Number { n } => return Ok(PureState::basis(d, n)),
        StateRecipe::Coherent { alpha } => (coherent_amplitudes(alpha, 2 * d), 2 * d),
        StateRecipe::Cat { alpha } => {
            let w = 2 * d;
            (coherent_amplitudes(alpha, w) + coherent_amplitudes(-alpha, w), w)
        }
        StateRecipe::Squeezed { xi, alpha } => {
            let w = workspace_dim(d, recipe.mean_photons());
            (squeeze_operator(xi, w) * coherent_amplitudes(alpha, w), w)
        }
    };
    let total = full.norm_squared();
    let kept = full.rows(0, d).norm_squared();
    let lost = (total - kept).max(0.0) / total;
    let edge = full.rows(d - 2, 2).norm_squared() / total;
    if lost + edge > TRUNCATION_BOUND {
        return Err(Error::Truncation { mode: 0, weight: lost + edge, bound: TRUNCATION_BOUND, dim: d });
    }
    debug_assert!(dim >= d);
    PureState::normalized(full.rows(0, d).into_owned())
}

fn workspace_dim(d: usize, nbar: f64) -> usize {
    2 * d + 2 * nbar.ceil() as usize
}

/// `e^{−|α|²/2} α^n / √n!` for `n < dim` (not renormalized).
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        v[n] = c;
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    v
}

/// `exp((ξ* a² − ξ a†²)/2)` on a truncated space, via the Hermitian generator.
fn squeeze_operator(xi: Complex64, dim: usize) -> ComplexMatrix {
    let a = ladder(dim);
    let a2 = &a * &a;
    let ad2 = a2.adjoint();
    // H = (i/2)(ξ* a² − ξ a†²) is Hermitian and S = e^{−iH}
    let h = linalg::hermitian_part(&((a2 * xi.conj() - ad2 * xi) * (0.5 * I)));
    exp_i_hermitian(&h, -1.0)
}

/// `e^{i t H}` for Hermitian `H`.
fn exp_i_hermitian(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let e = linalg::eigh(h);
    let mut scaled = e.vectors.clone();
    for (k, v) in e.values.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, t * v);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= ph);
    }
    scaled * e.vectors.adjoint()
}

/// Real eigendecomposition of the truncated `x` on a workspace.
struct QuadratureEigen {
    nodes: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl QuadratureEigen {
    fn new(workspace: usize) -> Self {
        let mut x = DMatrix::<f64>::zeros(workspace, workspace);
        for n in 1..workspace {
            let v = (n as f64 / 2.0).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        let e = x.symmetric_eigen();
        QuadratureEigen { nodes: e.eigenvalues.iter().copied().collect(), vectors: e.eigenvectors }
    }

    /// Top-left `d × d` block of `D(α) = R_θ e^{i√2|α| x} R_θ†` with `R_θ = e^{iθn}`, `θ = arg α − π/2`.
    fn displacement_block(&self, alpha: Complex64, d: usize) -> ComplexMatrix {
        let t = std::f64::consts::SQRT_2 * alpha.norm();
        let theta = alpha.arg() - std::f64::consts::FRAC_PI_2;
        let w = self.nodes.len();
        let low = self.vectors.rows(0, d);
        let mut left = ComplexMatrix::zeros(d, w);
        for k in 0..w {
            let ph = Complex64::from_polar(1.0, t * self.nodes[k]);
            for n in 0..d {
                left[(n, k)] = ph * low[(n, k)];
            }
        }
        let right = low.transpose().map(|v| Complex64::new(v, 0.0));
        let mut m = left * right;
        for n in 0..d {
            for k in 0..d {
                m[(n, k)] *= Complex64::from_polar(1.0, theta * (n as f64 - k as f64));
            }
        }
        m
    }
}

fn displacement_workspace(d: usize, alpha_norm_sqr: f64) -> usize {
    2 * d + 2 * alpha_norm_sqr.ceil() as usize
}

/// `D(α) = Π_i exp(α_i a_i† − α_i* a_i)`, computed per mode by a spectral
/// exponential on a padded workspace and projected back.
pub fn displacement_operator(alpha: &[Complex64], fock: &FockSpace) -> Result<ComplexMatrix> {
    check_alpha(alpha, fock)?;
    let d = fock.dim_per_mode();
    let mut total: Option<ComplexMatrix> = None;
    for &a in alpha {
        StateRecipe::Coherent { alpha: a }.check_health(d)?;
        let block = QuadratureEigen::new(displacement_workspace(d, a.norm_sqr())).displacement_block(a, d);
        total = Some(match total {
            None => block,
            Some(t) => linalg::kron(&t, &block),
        });
    }
    Ok(total.expect("at least one mode"))
}

/// `χ_ρ(α) = tr[ρ D(α)]`.
pub fn characteristic_function(rho: &DensityMatrix, alpha: &[Complex64], fock: &FockSpace) -> Result<Complex64> {
    fock.check_state_dim(rho.dim())?;
    let d = displacement_operator(alpha, fock)?;
    Ok(linalg::trace_of_product(rho.matrix(), &d))
}

fn check_alpha(alpha: &[Complex64], fock: &FockSpace) -> Result<()> {
    if alpha.len() != fock.n_modes() {
        return Err(Error::DimensionMismatch { expected: fock.n_modes(), found: alpha.len() });
    }
    if alpha.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::InvalidParameter("displacement must be finite".into()));
    }
    Ok(())
}

/// Evaluates the single-mode `χ_ρ` at many points up to a fixed radius.
///
/// With `x = V diag(ξ) Vᵀ` on a workspace padded for the radius, precomputes
/// `B_{k,s} = Σ_n ρ_{n,n+s} V_{n+s,k} V_{n,k}` so that
/// `χ(α) = Σ_k e^{i√2|α|ξ_k} Σ_s e^{iθs} B_{k,s}`.
pub struct CharacteristicGrid {
    nodes: Vec<f64>,
    /// `B[k][s + d − 1]`
    b: Vec<Vec<Complex64>>,
    d: usize,
    max_radius: f64,
}

impl CharacteristicGrid {
    pub fn new(rho: &DensityMatrix, max_radius: f64) -> Result<Self> {
        if !(max_radius >= 0.0) || !max_radius.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be finite and nonnegative, got {max_radius}")));
        }
        let d = rho.dim();
        let eig = QuadratureEigen::new(displacement_workspace(d, max_radius * max_radius));
        let m = rho.matrix();
        let w = eig.nodes.len();
        let mut b = vec![vec![ZERO; 2 * d - 1]; w];
        for (k, row) in b.iter_mut().enumerate() {
            for n in 0..d {
                let vn = eig.vectors[(n, k)];
                for np in 0..d {
                    // s = np − n; entry ρ_{n, np}
                    row[np + d - 1 - n] += m[(n, np)] * (vn * eig.vectors[(np, k)]);
                }
            }
        }
        Ok(CharacteristicGrid { nodes: eig.nodes, b, d, max_radius })
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn eval(&self, alpha: Complex64) -> Complex64 {
        let t = std::f64::consts::SQRT_2 * alpha.norm();
        let theta = alpha.arg() - std::f64::consts::FRAC_PI_2;
        let d = self.d as isize;
        // χ = Σ_{n,np} ρ_{n,np} D_{np,n}, D_{np,n} carries e^{iθ(np−n)}
        let phases: Vec<Complex64> = (-(d - 1)..d).map(|s| Complex64::from_polar(1.0, theta * s as f64)).collect();
        let mut total = ZERO;
        for (k, row) in self.b.iter().enumerate() {
            let inner: Complex64 = row.iter().zip(&phases).map(|(b, p)| b * p).sum();
            total += Complex64::from_polar(1.0, t * self.nodes[k]) * inner;
        }
        total
    }
}

/// Mean photon number `tr(ρ a†a)` of a single-mode state.
pub fn mean_photon_number(rho: &DensityMatrix) -> f64 {
    (0..rho.dim()).map(|n| n as f64 * rho.matrix()[(n, n)].re).sum()
}
