//! Dense complex linear algebra shared by every other module.
//!
//! Everything is built on one primitive: the Hermitian eigendecomposition in
//! [`eigh`]. Matrix functions (square roots, exponentials, logarithms) are
//! evaluated spectrally from it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result, Violation};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hard cap on the dimension of any tensor product.
pub const DEFAULT_DIM_CAP: usize = 1 << 16;

/// Eigenvalues sorted descending with matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigensystem {
    /// `Σ_i λ_i |v_i⟩⟨v_i|`.
    pub fn rebuild(&self) -> ComplexMatrix {
        rebuild_spectral(&self.values, &self.vectors, |x| x)
    }

    /// Applies `f` to the eigenvalues and rebuilds.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        rebuild_spectral(&self.values, &self.vectors, f)
    }
}

pub(crate) fn rebuild_spectral(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let s = f(v);
        scaled.column_mut(k).scale_mut(s);
    }
    &scaled * vectors.adjoint()
}

/// Largest absolute entry of `m - m†`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("matrix has non-finite entries".into()))
    }
}

/// Hermitian eigendecomposition with the canonical output conventions:
/// eigenvalues descending, and each eigenvector rotated so that its
/// largest-magnitude component is real and positive.
///
/// The input is symmetrized before decomposition; callers validate Hermiticity.
pub fn eigh(m: &ComplexMatrix) -> Eigensystem {
    let n = m.nrows();
    if n == 0 {
        return Eigensystem { values: vec![], vectors: ComplexMatrix::zeros(0, 0) };
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Eigensystem { values, vectors }
}

/// Makes the first largest-magnitude component real and positive.
pub(crate) fn fix_phase(v: &mut ComplexVector) {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // a relative margin keeps the choice stable against rounding in near-ties
        if z.norm() > best_mag * (1.0 + 1e-9) {
            best_mag = z.norm();
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / best_mag;
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.sum()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// `tr(X Y)` without forming the product.
pub fn trace_of_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..x.nrows() {
        for k in 0..x.ncols() {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Squared Hilbert–Schmidt norm `tr(X† X)`.
pub fn hs_norm_sqr(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Kronecker product, first factor is the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product guarded by a dimension cap.
pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.nrows().saturating_mul(b.nrows());
    let cols = a.ncols().saturating_mul(b.ncols());
    let dim = rows.max(cols);
    if dim > cap {
        return Err(Error::ResourceLimit { dim, cap });
    }
    Ok(kron(a, b))
}

/// Applies `op` (d×d) to subsystem `site` of each column of `vecs`, where the
/// full space is the tensor product of `dims` (first subsystem slowest).
pub fn apply_local(op: &ComplexMatrix, site: usize, dims: &[usize], vecs: &ComplexMatrix) -> ComplexMatrix {
    let d = dims[site];
    debug_assert_eq!(op.nrows(), d);
    let inner: usize = dims[site + 1..].iter().product();
    let outer: usize = dims[..site].iter().product();
    let mut out = ComplexMatrix::zeros(vecs.nrows(), vecs.ncols());
    for c in 0..vecs.ncols() {
        for o in 0..outer {
            for i in 0..inner {
                for r in 0..d {
                    let mut acc = ZERO;
                    for s in 0..d {
                        let w = op[(r, s)];
                        if w != ZERO {
                            acc += w * vecs[(o * d * inner + s * inner + i, c)];
                        }
                    }
                    out[(o * d * inner + r * inner + i, c)] = acc;
                }
            }
        }
    }
    out
}

/// Embeds a single-site operator into the full tensor-product space.
pub fn embed_local(op: &ComplexMatrix, site: usize, dims: &[usize]) -> ComplexMatrix {
    let outer: usize = dims[..site].iter().product();
    let inner: usize = dims[site + 1..].iter().product();
    kron(&kron(&identity(outer), op), &identity(inner))
}

/// `(Σ_i |X_ij − Y_ij|²)^{1/2}` relative to `max(1, ‖Y‖)`.
pub fn relative_distance(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let diff = hs_norm_sqr(&(x - y)).sqrt();
    diff / hs_norm_sqr(y).sqrt().max(1.0)
}

/// Largest eigenvalue magnitude (spectral norm for Hermitian input).
pub fn hermitian_spectral_norm(m: &ComplexMatrix) -> f64 {
    let e = eigh(m);
    e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub(crate) fn validation(v: Vec<Violation>) -> Result<()> {
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

// ---------------------------------------------------------------------------
// random sampling

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `rows × cols` matrix of independent standard complex Gaussians.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // column-major fill keeps the draw order fixed for a given seed
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed isometry (`rows ≥ cols`) from the QR decomposition of a
/// Gaussian matrix, with the diagonal of R made positive.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols);
    let g = gaussian_matrix(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for z in q.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    haar_isometry(rng, dim, dim)
}

/// GUE-like random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    hermitian_part(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 8);
        let e = eigh(&h);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let orth = e.vectors.adjoint() * &e.vectors;
        assert!(relative_distance(&orth, &identity(8)) < 1e-12);
        let scale = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(hs_norm_sqr(&(e.rebuild() - &h)).sqrt() / scale < 1e-8);
    }

    #[test]
    fn eigenvector_phase_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 5);
        let e = eigh(&h);
        for k in 0..5 {
            let col = e.vectors.column(k);
            let (idx, _) = col.iter().enumerate().fold((0, -1.0), |(bi, bm), (i, z)| {
                if z.norm() > bm * (1.0 + 1e-9) {
                    (i, z.norm())
                } else {
                    (bi, bm)
                }
            });
            assert!(col[idx].im.abs() < 1e-14 && col[idx].re > 0.0);
        }
    }

    #[test]
    fn trace_norm_of_rank_one_outer_product() {
        // |0⟩⟨1| / 2 has a single singular value 1/2
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!((trace_norm(&m) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn apply_local_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = [2, 3, 2];
        let op = gaussian_matrix(&mut rng, 3, 3);
        let v = gaussian_matrix(&mut rng, 12, 2);
        let direct = embed_local(&op, 1, &dims) * &v;
        assert!(relative_distance(&apply_local(&op, 1, &dims, &v), &direct) < 1e-14);
    }

    #[test]
    fn haar_isometry_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = haar_isometry(&mut rng, 6, 3);
        assert!(relative_distance(&(w.adjoint() * &w), &identity(3)) < 1e-13);
    }

    #[test]
    fn kron_cap_is_enforced() {
        let a = identity(300);
        assert!(matches!(kron_capped(&a, &a, DEFAULT_DIM_CAP), Err(Error::ResourceLimit { dim: 90000, .. })));
    }
}
