//! JSON matrix format: `{"dim": d, "re": [[...]], "im": [[...]]}` with
//! row-major rows. `im` may be omitted for real input. A state may also be
//! given as a vector of amplitudes, with `re` (and `im`) flat lists of length `d`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::state::{validate_density, DensityMatrix, HermitianObservable, PureState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entries {
    Matrix(Vec<Vec<f64>>),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Entries,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Entries>,
}

/// A parsed file: either a square matrix or a state vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Matrix(ComplexMatrix),
    Vector(ComplexVector),
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixJson { dim: m.nrows(), re: Entries::Matrix(rows(|z| z.re)), im: Some(Entries::Matrix(rows(|z| z.im))) }
    }

    pub fn from_vector(v: &ComplexVector) -> Self {
        MatrixJson {
            dim: v.len(),
            re: Entries::Vector(v.iter().map(|z| z.re).collect()),
            im: Some(Entries::Vector(v.iter().map(|z| z.im).collect())),
        }
    }

    pub fn to_parsed(&self) -> Result<Parsed> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Parse("dim must be positive".into()));
        }
        match (&self.re, &self.im) {
            (Entries::Matrix(re), im) => {
                let im = match im {
                    None => None,
                    Some(Entries::Matrix(rows)) => Some(rows),
                    Some(Entries::Vector(_)) => {
                        return Err(Error::Parse("`re` is a matrix but `im` is a vector".into()))
                    }
                };
                check_rows("re", re, d)?;
                if let Some(im) = im {
                    check_rows("im", im, d)?;
                }
                let mut m = ComplexMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let imag = im.map_or(0.0, |rows| rows[i][j]);
                        m[(i, j)] = Complex64::new(re[i][j], imag);
                    }
                }
                check_finite(m.iter())?;
                Ok(Parsed::Matrix(m))
            }
            (Entries::Vector(re), im) => {
                let im = match im {
                    None => None,
                    Some(Entries::Vector(v)) => Some(v),
                    Some(Entries::Matrix(_)) => {
                        return Err(Error::Parse("`re` is a vector but `im` is a matrix".into()))
                    }
                };
                if re.len() != d || im.is_some_and(|v| v.len() != d) {
                    return Err(Error::Parse(format!("amplitude lists must have length dim = {d}")));
                }
                let v =
                    ComplexVector::from_iterator(d, (0..d).map(|i| Complex64::new(re[i], im.map_or(0.0, |v| v[i]))));
                check_finite(v.iter())?;
                Ok(Parsed::Vector(v))
            }
        }
    }
}

fn check_rows(name: &str, rows: &[Vec<f64>], d: usize) -> Result<()> {
    if rows.len() != d {
        return Err(Error::Parse(format!("`{name}` has {} rows, expected dim = {d}", rows.len())));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Parse(format!("`{name}` row {i} has {} entries, expected {d}", row.len())));
    }
    Ok(())
}

fn check_finite<'a>(mut it: impl Iterator<Item = &'a Complex64>) -> Result<()> {
    if it.any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse("entries must be finite".into()));
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<Parsed> {
    let json: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    json.to_parsed()
}

/// A density matrix, or the projector of a (normalized) state vector.
pub fn read_state(text: &str) -> Result<DensityMatrix> {
    match parse(text)? {
        Parsed::Matrix(m) => validate_density(m),
        Parsed::Vector(v) => Ok(PureState::new(v)?.density()),
    }
}

pub fn read_pure_state(text: &str) -> Result<PureState> {
    match parse(text)? {
        Parsed::Vector(v) => PureState::new(v),
        Parsed::Matrix(m) => DensityMatrix::from_matrix(m)?
            .as_pure()
            .ok_or_else(|| Error::InvalidParameter("expected a pure state".into())),
    }
}

pub fn read_observable(text: &str) -> Result<HermitianObservable> {
    match parse(text)? {
        Parsed::Matrix(m) => HermitianObservable::new(m),
        Parsed::Vector(_) => Err(Error::Parse("an observable must be a matrix".into())),
    }
}

pub fn write_matrix(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("finite matrices serialize")
}

pub fn write_vector(v: &ComplexVector) -> String {
    serde_json::to_string(&MatrixJson::from_vector(v)).expect("finite vectors serialize")
}
