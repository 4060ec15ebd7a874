//! Quantum states, observables, and the operations that build and combine them.

use std::borrow::Cow;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Violation};
use crate::linalg::{
    self, check_finite, check_square, eigh, gaussian_matrix, hermiticity_defect, kron_capped, rebuild_spectral,
    ComplexMatrix, ComplexVector, Eigensystem, ZERO,
};

/// Validation tolerances. The defaults are the ones every check in the crate uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub negativity: f64,
    pub normalization: f64,
    pub orthonormality: f64,
    pub dim_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-10,
            trace: 1e-10,
            negativity: 1e-10,
            normalization: 1e-10,
            orthonormality: 1e-8,
            dim_cap: linalg::DEFAULT_DIM_CAP,
        }
    }
}

/// Eigenvalues at or below this are exact zeros when summing over a spectrum.
pub const RANK_CUTOFF: f64 = 1e-12;

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Tolerances::default().normalization {
            return Err(Error::Validation(vec![Violation {
                what: "state norm differs from 1",
                measured: (norm - 1.0).abs(),
                bound: Tolerances::default().normalization,
            }]));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(PureState { amplitudes: amplitudes.unscale(norm) })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v[index] = linalg::ONE;
        PureState { amplitudes: v }
    }

    /// `(|i⟩ + |j⟩)/√2`.
    pub fn equal_superposition(dim: usize, i: usize, j: usize) -> Result<Self> {
        if i >= dim || j >= dim {
            return Err(Error::InvalidParameter(format!("index out of range for dimension {dim}")));
        }
        let mut v = ComplexVector::zeros(dim);
        v[i] += linalg::ONE;
        v[j] += linalg::ONE;
        Self::normalized(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Tensor product, `self` is the slow index.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState { amplitudes: self.amplitudes.kronecker(&other.amplitudes) }
    }
}

/// Spectral data of a density matrix. `vectors` may hold only the support;
/// the kernel is then the orthogonal complement.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    /// Eigenpairs with eigenvalue above `cutoff`.
    pub fn support(&self, cutoff: f64) -> (Vec<f64>, ComplexMatrix) {
        let k = self.values.iter().take_while(|&&v| v > cutoff).count();
        (self.values[..k].to_vec(), self.vectors.columns(0, k).into_owned())
    }
}

/// A validated density matrix. Whichever of the matrix or the spectrum is not
/// supplied at construction is computed on first use.
#[derive(Debug)]
pub struct DensityMatrix {
    dim: usize,
    matrix: OnceLock<ComplexMatrix>,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for DensityMatrix {
    fn clone(&self) -> Self {
        let matrix = OnceLock::new();
        if let Some(m) = self.matrix.get() {
            let _ = matrix.set(m.clone());
        }
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        DensityMatrix { dim: self.dim, matrix, spectrum }
    }
}

impl DensityMatrix {
    /// Validates `m` against the default tolerances.
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        validate_density_with(m, &Tolerances::default())
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let spectrum = Spectrum {
            values: vec![1.0],
            vectors: ComplexMatrix::from_column_slice(psi.dim(), 1, psi.amplitudes().as_slice()),
        };
        let out = DensityMatrix { dim: psi.dim(), matrix: OnceLock::new(), spectrum: OnceLock::new() };
        let _ = out.spectrum.set(spectrum);
        out
    }

    /// Builds `Σ_k w_k |v_k⟩⟨v_k|` from orthonormal columns `vectors` and
    /// nonnegative weights summing to one. The matrix is formed lazily, which
    /// lets low-rank states on large spaces be used without materializing it.
    pub fn from_orthonormal_ensemble(weights: &[f64], vectors: ComplexMatrix) -> Result<Self> {
        let tol = Tolerances::default();
        if weights.len() != vectors.ncols() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: vectors.ncols() });
        }
        let mut violations = Vec::new();
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol.trace {
            violations.push(Violation {
                what: "trace differs from 1",
                measured: (total - 1.0).abs(),
                bound: tol.trace,
            });
        }
        let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol.negativity {
            violations.push(Violation { what: "negative eigenvalue", measured: min, bound: -tol.negativity });
        }
        let gram = vectors.adjoint() * &vectors;
        let defect = (gram - linalg::identity(weights.len())).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if defect > tol.orthonormality {
            violations.push(Violation {
                what: "ensemble vectors not orthonormal",
                measured: defect,
                bound: tol.orthonormality,
            });
        }
        linalg::validation(violations)?;
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
        let values: Vec<f64> = order.iter().map(|&k| weights[k]).collect();
        let mut sorted = ComplexMatrix::zeros(vectors.nrows(), order.len());
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &vectors.column(src));
        }
        let out = DensityMatrix { dim: vectors.nrows(), matrix: OnceLock::new(), spectrum: OnceLock::new() };
        let _ = out.spectrum.set(Spectrum { values, vectors: sorted });
        Ok(out)
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = linalg::identity(dim).unscale(dim as f64);
        let out = DensityMatrix { dim, matrix: OnceLock::new(), spectrum: OnceLock::new() };
        let _ = out.spectrum.set(Spectrum { values: vec![1.0 / dim as f64; dim], vectors: linalg::identity(dim) });
        let _ = out.matrix.set(m);
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.matrix.get_or_init(|| {
            let s = self.spectrum.get().expect("density matrix holds a matrix or a spectrum");
            rebuild_spectral(&s.values, &s.vectors, |x| x)
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let e = eigh(self.matrix.get().expect("density matrix holds a matrix or a spectrum"));
            Spectrum { values: e.values, vectors: e.vectors }
        })
    }

    /// Eigenpairs above [`RANK_CUTOFF`].
    pub fn support(&self) -> (Vec<f64>, ComplexMatrix) {
        self.spectrum().support(RANK_CUTOFF)
    }

    pub fn rank(&self) -> usize {
        self.spectrum().values.iter().filter(|&&v| v > RANK_CUTOFF).count()
    }

    pub fn purity(&self) -> f64 {
        self.spectrum().values.iter().map(|v| v * v).sum()
    }

    /// Spectral matrix function on the support; eigenvalues below zero are clamped.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let (values, vectors) = self.support();
        rebuild_spectral(&values, &vectors, |x| f(x.max(0.0)))
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        self.map_spectrum(f64::sqrt)
    }

    /// Von Neumann entropy in nats, `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.spectrum().values)
    }

    /// Expectation value `tr(ρ X)`.
    pub fn expectation(&self, x: &ComplexMatrix) -> Complex64 {
        linalg::trace_of_product(self.matrix(), x)
    }

    /// If the state is pure (within `1e-10` purity), its vector.
    pub fn as_pure(&self) -> Option<PureState> {
        let s = self.spectrum();
        if (s.values[0] - 1.0).abs() <= 1e-10 && self.rank() == 1 {
            Some(PureState { amplitudes: s.vectors.column(0).into_owned() })
        } else {
            None
        }
    }
}

pub(crate) fn entropy_of(values: &[f64]) -> f64 {
    values.iter().filter(|&&v| v > RANK_CUTOFF).map(|&v| -v * v.ln()).sum()
}

/// Checks a candidate density matrix and returns either the validated state or
/// every violated invariant with its measured magnitude.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityMatrix> {
    validate_density_with(m, &Tolerances::default())
}

pub fn validate_density_with(m: ComplexMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    let dim = check_square(&m)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    check_finite(&m)?;
    let mut violations = Vec::new();
    let herm = hermiticity_defect(&m);
    if herm > tol.hermiticity {
        violations.push(Violation { what: "not Hermitian", measured: herm, bound: tol.hermiticity });
    }
    let tr = linalg::trace(&m);
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        violations.push(Violation { what: "trace differs from 1", measured: tr.re, bound: tol.trace });
    }
    let sym = linalg::hermitian_part(&m);
    let e = eigh(&sym);
    let min = *e.values.last().unwrap();
    if min < -tol.negativity {
        violations.push(Violation { what: "negative eigenvalue", measured: min, bound: -tol.negativity });
    }
    linalg::validation(violations)?;
    let out = DensityMatrix { dim, matrix: OnceLock::new(), spectrum: OnceLock::new() };
    let _ = out.matrix.set(sym);
    let _ = out.spectrum.set(Spectrum { values: e.values, vectors: e.vectors });
    Ok(out)
}

#[derive(Debug)]
enum ObservableRepr {
    Dense {
        matrix: ComplexMatrix,
        eig: OnceLock<Eigensystem>,
    },
    /// Diagonal in the computational basis; the eigenbasis is never materialized.
    Diagonal {
        values: Vec<f64>,
    },
}

/// The macroscopic observable `A`.
#[derive(Debug)]
pub struct HermitianObservable {
    dim: usize,
    repr: ObservableRepr,
}

impl Clone for HermitianObservable {
    fn clone(&self) -> Self {
        match &self.repr {
            ObservableRepr::Dense { matrix, eig } => {
                let cell = OnceLock::new();
                if let Some(e) = eig.get() {
                    let _ = cell.set(e.clone());
                }
                HermitianObservable { dim: self.dim, repr: ObservableRepr::Dense { matrix: matrix.clone(), eig: cell } }
            }
            ObservableRepr::Diagonal { values } => {
                HermitianObservable { dim: self.dim, repr: ObservableRepr::Diagonal { values: values.clone() } }
            }
        }
    }
}

/// Eigenvalues of an observable together with its eigenbasis; `basis == None`
/// means the computational basis.
#[derive(Debug, Clone, Copy)]
pub struct EigenView<'a> {
    pub values: &'a [f64],
    pub basis: Option<&'a ComplexMatrix>,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = check_square(&matrix)?;
        check_finite(&matrix)?;
        let tol = Tolerances::default();
        let defect = hermiticity_defect(&matrix);
        if defect > tol.hermiticity {
            return Err(Error::Validation(vec![Violation {
                what: "not Hermitian",
                measured: defect,
                bound: tol.hermiticity,
            }]));
        }
        Ok(HermitianObservable {
            dim,
            repr: ObservableRepr::Dense { matrix: linalg::hermitian_part(&matrix), eig: OnceLock::new() },
        })
    }

    /// `diag(values)` in the computational basis.
    pub fn diagonal(values: Vec<f64>) -> Self {
        HermitianObservable { dim: values.len(), repr: ObservableRepr::Diagonal { values } }
    }

    /// Pauli `σ^z` (eigenvalues `+1` on `|0⟩`, `−1` on `|1⟩`).
    pub fn pauli_z() -> Self {
        Self::diagonal(vec![1.0, -1.0])
    }

    /// `Z = Σ_i σ^z_i` on `n` qubits.
    pub fn collective_z(n: usize) -> Self {
        let dim = 1usize << n;
        let values = (0..dim).map(|b: usize| n as f64 - 2.0 * b.count_ones() as f64).collect();
        Self::diagonal(values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, ObservableRepr::Diagonal { .. })
    }

    pub fn matrix(&self) -> Cow<'_, ComplexMatrix> {
        match &self.repr {
            ObservableRepr::Dense { matrix, .. } => Cow::Borrowed(matrix),
            ObservableRepr::Diagonal { values } => Cow::Owned(ComplexMatrix::from_diagonal(
                &ComplexVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0))),
            )),
        }
    }

    pub fn eigen(&self) -> EigenView<'_> {
        match &self.repr {
            ObservableRepr::Dense { matrix, eig } => {
                let e = eig.get_or_init(|| eigh(matrix));
                EigenView { values: &e.values, basis: Some(&e.vectors) }
            }
            ObservableRepr::Diagonal { values } => EigenView { values, basis: None },
        }
    }

    /// `max a_i − min a_i`.
    pub fn spectral_range(&self) -> f64 {
        let v = self.eigen().values;
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// `A · v` for each column of `v`.
    pub fn apply(&self, v: &ComplexMatrix) -> ComplexMatrix {
        match &self.repr {
            ObservableRepr::Dense { matrix, .. } => matrix * v,
            ObservableRepr::Diagonal { values } => {
                let mut out = v.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row.scale_mut(values[i]);
                }
                out
            }
        }
    }

    /// Expresses an operator in the eigenbasis of `A`: `U† X U`.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        match self.eigen().basis {
            Some(u) => u.adjoint() * x * u,
            None => x.clone(),
        }
    }

    /// Inverse of [`Self::to_eigenbasis`].
    pub fn from_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        match self.eigen().basis {
            Some(u) => u * x * u.adjoint(),
            None => x.clone(),
        }
    }

    /// `A + cI`.
    pub fn shifted(&self, c: f64) -> HermitianObservable {
        match &self.repr {
            ObservableRepr::Dense { matrix, .. } => {
                let m = matrix + linalg::identity(self.dim).scale(c);
                HermitianObservable { dim: self.dim, repr: ObservableRepr::Dense { matrix: m, eig: OnceLock::new() } }
            }
            ObservableRepr::Diagonal { values } => Self::diagonal(values.iter().map(|v| v + c).collect()),
        }
    }

    /// `A ⊗ I_d`.
    pub fn extend_identity(&self, ancilla_dim: usize) -> Result<HermitianObservable> {
        let cap = Tolerances::default().dim_cap;
        match &self.repr {
            ObservableRepr::Diagonal { values } => {
                if values.len() * ancilla_dim > cap {
                    return Err(Error::ResourceLimit { dim: values.len() * ancilla_dim, cap });
                }
                Ok(Self::diagonal(values.iter().flat_map(|&v| std::iter::repeat_n(v, ancilla_dim)).collect()))
            }
            ObservableRepr::Dense { matrix, .. } => {
                HermitianObservable::new(kron_capped(matrix, &linalg::identity(ancilla_dim), cap)?)
            }
        }
    }

    /// `Σ_i A_i` on `n` copies, each acting on its own factor.
    pub fn collective(&self, copies: usize) -> Result<HermitianObservable> {
        let cap = Tolerances::default().dim_cap;
        let dim = self
            .dim
            .checked_pow(copies as u32)
            .filter(|&d| d <= cap)
            .ok_or(Error::ResourceLimit { dim: usize::MAX, cap })?;
        match &self.repr {
            ObservableRepr::Diagonal { values } => {
                let mut out = vec![0.0; 1];
                for _ in 0..copies {
                    out = out.iter().flat_map(|&acc| values.iter().map(move |&v| acc + v)).collect();
                }
                Ok(Self::diagonal(out))
            }
            ObservableRepr::Dense { matrix, .. } => {
                let dims = vec![self.dim; copies];
                let mut total = ComplexMatrix::zeros(dim, dim);
                for site in 0..copies {
                    total += linalg::embed_local(matrix, site, &dims);
                }
                HermitianObservable::new(total)
            }
        }
    }
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues descending,
/// orthonormal eigenvectors with the canonical phase.
pub fn spectral_decompose(m: &ComplexMatrix) -> Result<Eigensystem> {
    check_square(m)?;
    check_finite(m)?;
    let tol = Tolerances::default();
    let defect = hermiticity_defect(m);
    if defect > tol.hermiticity {
        return Err(Error::Validation(vec![Violation {
            what: "not Hermitian",
            measured: defect,
            bound: tol.hermiticity,
        }]));
    }
    Ok(eigh(m))
}

/// Kronecker product under the default dimension cap.
pub fn tensor_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(x, y, Tolerances::default().dim_cap)
}

/// `ρ ⊗ σ` as a validated state.
pub fn tensor_states(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(tensor_product(rho.matrix(), sigma.matrix())?)
}

/// Reduced state on the subsystems listed in `keep` (in increasing order of
/// subsystem index, whatever order `keep` is given in).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: total });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidParameter(format!("subsystem {bad} out of range")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kdims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let kdim: usize = kdims.iter().product();
    let tdim: usize = tdims.iter().product();

    // strides of each subsystem in the full index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offset = |sub: &[usize], subdims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for p in (0..sub.len()).rev() {
            off += (idx % subdims[p]) * strides[sub[p]];
            idx /= subdims[p];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kdim).map(|k| offset(&kept, &kdims, k)).collect();
    let traced_off: Vec<usize> = (0..tdim).map(|t| offset(&traced, &tdims, t)).collect();

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(kdim, kdim);
    for r in 0..kdim {
        for c in 0..kdim {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(kept_off[r] + t, kept_off[c] + t)];
            }
            out[(r, c)] = acc;
        }
    }
    DensityMatrix::from_matrix(out)
}

/// `G G† / tr(G G†)` for a `dim × rank` matrix `G` of standard complex Gaussians.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidParameter(format!("need 1 <= rank <= dim, got rank {rank}, dim {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(&mut rng, dim, rank);
    let gg = &g * g.adjoint();
    let tr = linalg::trace(&gg).re;
    DensityMatrix::from_matrix(gg.unscale(tr))
}

/// Haar-random pure state.
pub fn random_pure_state(dim: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(&mut rng, dim, 1);
    PureState::normalized(g.column(0).into_owned()).expect("gaussian vector is nonzero")
}

/// `T_x(ρ) = e^{−ixA} ρ e^{ixA}`, evaluated entrywise in the eigenbasis of `A`.
pub fn phase_conjugate(rho: &DensityMatrix, a: &HermitianObservable, x: f64) -> Result<DensityMatrix> {
    let m = phase_conjugate_matrix(rho.matrix(), a, x)?;
    DensityMatrix::from_matrix(m)
}

/// [`phase_conjugate`] on an arbitrary operator.
pub fn phase_conjugate_matrix(m: &ComplexMatrix, a: &HermitianObservable, x: f64) -> Result<ComplexMatrix> {
    if m.nrows() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: m.nrows() });
    }
    let values = a.eigen().values;
    let mut inner = a.to_eigenbasis(m);
    for i in 0..values.len() {
        for j in 0..values.len() {
            inner[(i, j)] *= Complex64::from_polar(1.0, -x * (values[i] - values[j]));
        }
    }
    Ok(a.from_eigenbasis(&inner))
}
