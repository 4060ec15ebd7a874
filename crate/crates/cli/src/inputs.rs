//! Resolution of `--state` and `--observable` arguments.
//!
//! Either a path to a JSON matrix/vector file, or one of the built-in names:
//!
//! | state spec            | meaning                                       |
//! |-----------------------|-----------------------------------------------|
//! | `mixed:<d>`           | `I/d`                                          |
//! | `ghz:<N>`             | `(|0…0⟩+|1…1⟩)/√2` on N qubits                 |
//! | `rho:<N>`             | the mixture `ρ_N` of GHZ-like branches         |
//! | `basis:<d>:<i>`       | `|i⟩` in dimension d                           |
//! | `qubit:<p0>`          | `√p0 |0⟩ + √(1−p0) |1⟩`                        |
//! | `number:<n>`          | Fock state (uses `--fock-dim`)                 |
//! | `coherent:<re>[,<im>]`| coherent state                                 |
//! | `cat:<re>[,<im>]`     | even cat                                       |
//! | `squeezed:<r>[,<re>[,<im>]]` | squeezed (real `ξ = r`) coherent state  |
//!
//! | observable spec  | meaning                                  |
//! |------------------|------------------------------------------|
//! | `z`              | `Σ_i σ^z_i` (dimension must be `2^N`)    |
//! | `x`, `p`, `n`    | summed quadrature / number over modes    |
//! | `diag:<v0>,<v1>,…` | diagonal observable                    |

use std::fs;

use macrocoh::bosonic::{standard_state, FockSpace, StateRecipe};
use macrocoh::error::{Error, Result};
use macrocoh::experiments::{build_rho_n, ghz_state};
use macrocoh::io;
use macrocoh::linalg::ComplexVector;
use macrocoh::macroscopicity::qubit_count;
use macrocoh::state::{DensityMatrix, HermitianObservable, PureState};
use num_complex::Complex64;

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{t}` is not a number")))).collect()
}

fn complex(s: &str) -> Result<Complex64> {
    match numbers(s)?.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(Error::Parse(format!("`{s}` is not `re` or `re,im`"))),
    }
}

fn count(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("`{s}` is not a nonnegative integer")))
}

pub fn recipe(spec: &str) -> Result<Option<StateRecipe>> {
    let Some((kind, arg)) = spec.split_once(':') else { return Ok(None) };
    Ok(Some(match kind {
        "number" => StateRecipe::Number { n: count(arg)? },
        "coherent" => StateRecipe::Coherent { alpha: complex(arg)? },
        "cat" => StateRecipe::Cat { alpha: complex(arg)? },
        "squeezed" => {
            let v = numbers(arg)?;
            let alpha = match v.as_slice() {
                [_] => Complex64::new(0.0, 0.0),
                [_, re] => Complex64::new(*re, 0.0),
                [_, re, im] => Complex64::new(*re, *im),
                _ => return Err(Error::Parse(format!("`{spec}`: expected squeezed:<r>[,<re>[,<im>]]"))),
            };
            StateRecipe::Squeezed { xi: Complex64::new(v[0], 0.0), alpha }
        }
        _ => return Ok(None),
    }))
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read `{path}`: {e}")))
}

pub fn pure_state(spec: &str, fock_dim: usize) -> Result<PureState> {
    if let Some(r) = recipe(spec)? {
        return standard_state(&r, &FockSpace::single_mode(fock_dim)?);
    }
    match spec.split_once(':') {
        Some(("ghz", n)) => ghz_state(count(n)?),
        Some(("qubit", p0)) => {
            let p0 = numbers(p0)?;
            match p0.as_slice() {
                [p] if (0.0..=1.0).contains(p) => PureState::normalized(ComplexVector::from_vec(vec![
                    Complex64::new(p.sqrt(), 0.0),
                    Complex64::new((1.0 - p).sqrt(), 0.0),
                ])),
                _ => Err(Error::InvalidParameter(format!("`{spec}`: expected qubit:<p0> with 0 ≤ p0 ≤ 1"))),
            }
        }
        Some(("basis", rest)) => {
            let (d, i) =
                rest.split_once(':').ok_or_else(|| Error::Parse(format!("`{spec}`: expected basis:<d>:<i>")))?;
            let (d, i) = (count(d)?, count(i)?);
            if i >= d {
                return Err(Error::InvalidParameter(format!("basis index {i} out of range for dimension {d}")));
            }
            Ok(PureState::basis(d, i))
        }
        _ => io::read_pure_state(&read(spec)?),
    }
}

pub fn state(spec: &str, fock_dim: usize) -> Result<DensityMatrix> {
    match spec.split_once(':') {
        Some(("mixed", d)) => {
            let d = count(d)?;
            if d == 0 {
                return Err(Error::InvalidParameter("dimension must be positive".into()));
            }
            Ok(DensityMatrix::maximally_mixed(d))
        }
        Some(("rho", n)) => build_rho_n(count(n)?),
        Some(("ghz" | "qubit" | "basis" | "number" | "coherent" | "cat" | "squeezed", _)) => {
            Ok(pure_state(spec, fock_dim)?.density())
        }
        _ => io::read_state(&read(spec)?),
    }
}

/// Fock space whose total dimension matches `dim` with `fock_dim` levels per mode.
pub fn fock_for(dim: usize, fock_dim: usize) -> Result<FockSpace> {
    let mut modes = 1;
    let mut total = fock_dim;
    while total < dim {
        total = total.saturating_mul(fock_dim);
        modes += 1;
    }
    if total != dim {
        return Err(Error::InvalidParameter(format!(
            "state dimension {dim} is not a power of the Fock dimension {fock_dim}"
        )));
    }
    FockSpace::new(modes, fock_dim)
}

pub fn observable(spec: &str, dim: usize, fock_dim: usize) -> Result<HermitianObservable> {
    match spec {
        "z" => Ok(HermitianObservable::collective_z(qubit_count(dim)?)),
        "x" | "p" | "n" => {
            let fock = fock_for(dim, fock_dim)?;
            let mut total = macrocoh::linalg::ComplexMatrix::zeros(dim, dim);
            for mode in 0..fock.n_modes() {
                total += match spec {
                    "x" => fock.mode_x(mode)?,
                    "p" => fock.mode_p(mode)?,
                    _ => macrocoh::linalg::embed_local(&fock.operators().number(), mode, &fock.dims()),
                };
            }
            HermitianObservable::new(total)
        }
        _ => match spec.strip_prefix("diag:") {
            Some(values) => {
                let v = numbers(values)?;
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                }
                Ok(HermitianObservable::diagonal(v))
            }
            None => {
                let a = io::read_observable(&read(spec)?)?;
                if a.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
                }
                Ok(a)
            }
        },
    }
}

/// An observable without a state to take the dimension from (`diag:` or a file).
pub fn standalone_observable(spec: &str) -> Result<HermitianObservable> {
    match spec.strip_prefix("diag:") {
        Some(values) => Ok(HermitianObservable::diagonal(numbers(values)?)),
        None if matches!(spec, "z" | "x" | "p" | "n") => {
            Err(Error::InvalidParameter(format!("observable `{spec}` needs a dimension; pass `diag:…` or a file")))
        }
        None => io::read_observable(&read(spec)?),
    }
}

pub fn pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("`{s}` is not `i,j`"))?;
    Ok((
        i.trim().parse().map_err(|_| format!("bad index `{i}`"))?,
        j.trim().parse().map_err(|_| format!("bad index `{j}`"))?,
    ))
}

pub fn even_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not an integer"))).collect()
}
