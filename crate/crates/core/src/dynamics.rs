//! Double-commutator decoherence `L(ρ) = −Σ_k c_k [B_k, [B_k, ρ]]` and its
//! purity-loss rate.

use serde::{Deserialize, Serialize};

use crate::bosonic::FockSpace;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::state::DensityMatrix;

#[derive(Debug, Clone)]
pub struct DoubleCommutatorGenerator {
    terms: Vec<(ComplexMatrix, f64)>,
}

impl DoubleCommutatorGenerator {
    /// Each `B_k` must be Hermitian (defect ≤ 1e-10) and each `c_k ≥ 0`.
    pub fn new(terms: Vec<(ComplexMatrix, f64)>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidParameter("generator needs at least one term".into()));
        };
        let d = linalg::check_square(&first.0)?;
        for (b, c) in &terms {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.nrows() });
            }
            if !(*c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("coefficients must be finite and nonnegative, got {c}")));
            }
            let defect = linalg::hermiticity_defect(b);
            if defect > 1e-10 {
                return Err(Error::InvalidParameter(format!("operator is not Hermitian (defect {defect:.3e})")));
            }
        }
        Ok(DoubleCommutatorGenerator { terms })
    }

    pub fn dim(&self) -> usize {
        self.terms[0].0.nrows()
    }

    pub fn terms(&self) -> &[(ComplexMatrix, f64)] {
        &self.terms
    }

    /// `L(X)`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for (b, c) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            let inner = linalg::commutator(b, x);
            out -= linalg::commutator(b, &inner).scale(*c);
        }
        out
    }
}

/// `−¼ Σ_i [x_i,[x_i,ρ]] + [p_i,[p_i,ρ]]`.
pub fn phase_space_generator(fock: &FockSpace) -> Result<DoubleCommutatorGenerator> {
    let mut terms = Vec::with_capacity(2 * fock.n_modes());
    for mode in 0..fock.n_modes() {
        terms.push((fock.mode_x(mode)?, 0.25));
        terms.push((fock.mode_p(mode)?, 0.25));
    }
    DoubleCommutatorGenerator::new(terms)
}

/// Single-mode `−c_x [x,[x,ρ]] − c_p [p,[p,ρ]]`.
pub fn nh_generator(c_x: f64, c_p: f64, fock: &FockSpace) -> Result<DoubleCommutatorGenerator> {
    if fock.n_modes() != 1 {
        return Err(Error::InvalidParameter("this model is single-mode".into()));
    }
    if c_x < 0.0 || c_p < 0.0 {
        return Err(Error::InvalidParameter(format!("coefficients must be nonnegative, got c_x = {c_x}, c_p = {c_p}")));
    }
    DoubleCommutatorGenerator::new(vec![(fock.mode_x(0)?, c_x), (fock.mode_p(0)?, c_p)])
}

/// `−tr(ρ L(ρ)) = −½ d/dt tr(ρ²)`.
pub fn purity_rate(rho: &DensityMatrix, generator: &DoubleCommutatorGenerator) -> Result<f64> {
    if rho.dim() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), found: rho.dim() });
    }
    Ok(-linalg::trace_of_product(rho.matrix(), &generator.apply(rho.matrix())).re)
}

#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: DensityMatrix,
    pub purity: f64,
}

/// Summary row of a trajectory point (for tables).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub purity: f64,
}

/// Smallest eigenvalue tolerated mid-flight before the integration is declared failed.
const REPAIR_TOLERANCE: f64 = 1e-8;

/// Fixed-step RK4 from `0` to `t` in `steps` steps. After every step the state
/// is re-Hermitized and its trace renormalized; a state that has drifted
/// further than `1e-8` below positivity is an error.
pub fn evolve(
    rho: &DensityMatrix,
    generator: &DoubleCommutatorGenerator,
    t: f64,
    steps: usize,
) -> Result<Vec<TrajectoryPoint>> {
    if rho.dim() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), found: rho.dim() });
    }
    if !(t >= 0.0) || !t.is_finite() || steps == 0 {
        return Err(Error::InvalidParameter(format!("need finite t ≥ 0 and steps ≥ 1, got t = {t}, steps = {steps}")));
    }
    let h = t / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TrajectoryPoint { time: 0.0, state: rho.clone(), purity: rho.purity() });
    let mut m = rho.matrix().clone();
    for step in 1..=steps {
        let k1 = generator.apply(&m);
        let k2 = generator.apply(&(&m + &k1 * nalgebra::Complex::new(h / 2.0, 0.0)));
        let k3 = generator.apply(&(&m + &k2 * nalgebra::Complex::new(h / 2.0, 0.0)));
        let k4 = generator.apply(&(&m + &k3 * nalgebra::Complex::new(h, 0.0)));
        m += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        m = linalg::hermitian_part(&m);
        let time = step as f64 * h;
        let tr = linalg::trace(&m).re;
        if !tr.is_finite() || tr <= 0.0 {
            return Err(Error::Integration { step, time, reason: format!("trace became {tr}") });
        }
        m = m.unscale(tr);
        let lowest = *linalg::eigh(&m).values.last().expect("nonempty");
        if lowest < -REPAIR_TOLERANCE {
            return Err(Error::Integration { step, time, reason: format!("eigenvalue {lowest:.3e} below zero") });
        }
        let state = DensityMatrix::from_matrix(m.clone()).map_err(|e| Error::Integration {
            step,
            time,
            reason: e.to_string(),
        })?;
        let purity = state.purity();
        out.push(TrajectoryPoint { time, state, purity });
    }
    Ok(out)
}
