//! Ideal parity unitaries, X<->Z stabilizer transformation, CNOT-chain
//! fidelity baseline, and parity-gate concatenation.
//!
//! All operators act on an ordered register of qubit names with the first
//! name as the most significant bit, matching the Fock basis convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// Which data qubits flip the ancilla, and on which data parity.
///
/// An empty data set is allowed: the empty set has even parity, so an even
/// gate on no data qubits is an unconditional ancilla flip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParityGateSpec {
    pub data_modes: Vec<String>,
    pub ancilla: String,
    pub parity: Parity,
}

impl ParityGateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.data_modes.iter().any(|d| *d == self.ancilla) {
            return Err(Error::InvalidSpec {
                path: "data_modes".into(),
                message: format!("ancilla `{}` also listed as data", self.ancilla),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.data_modes {
            if !seen.insert(d) {
                return Err(Error::InvalidSpec {
                    path: "data_modes".into(),
                    message: format!("duplicate data mode `{d}`"),
                });
            }
        }
        Ok(())
    }
}

fn position(register: &[String], name: &str) -> Result<usize> {
    register
        .iter()
        .position(|r| r == name)
        .ok_or_else(|| Error::UnknownMode(name.to_string()))
}

/// Permutation matrix flipping the ancilla bit exactly when the data parity
/// matches `spec.parity`; identity on every other basis state.
pub fn ideal_parity_unitary(spec: &ParityGateSpec, register: &[String]) -> Result<RMat> {
    spec.validate()?;
    let n = register.len();
    let ancilla_pos = position(register, &spec.ancilla)?;
    let data_pos: Vec<usize> = spec
        .data_modes
        .iter()
        .map(|d| position(register, d))
        .collect::<Result<_>>()?;
    let dim = 1usize << n;
    let bit = |b: usize, pos: usize| (b >> (n - 1 - pos)) & 1;
    let mut u = RMat::zeros(dim, dim);
    for b in 0..dim {
        let weight: usize = data_pos.iter().map(|&p| bit(b, p)).sum();
        let flips = match spec.parity {
            Parity::Odd => weight % 2 == 1,
            Parity::Even => weight % 2 == 0,
        };
        let out = if flips { b ^ (1 << (n - 1 - ancilla_pos)) } else { b };
        u[(out, b)] = 1.0;
    }
    Ok(u)
}

/// Conjugate `u` by Hadamards on the named data modes: `(H_S) u (H_S)`.
/// Involutive; turns a Z-type parity check into the corresponding X-type one
/// (or a mixed type when `subset` covers only part of the register).
pub fn x_from_z_transform(u: &CMat, register: &[String], subset: &[String]) -> Result<CMat> {
    let n = register.len();
    if u.nrows() != (1 << n) {
        return Err(Error::DimensionMismatch(u.nrows(), 1 << n));
    }
    let positions: Vec<usize> = subset
        .iter()
        .map(|s| position(register, s))
        .collect::<Result<_>>()?;
    let h = hadamard_on(n, &positions);
    Ok(&h * u * &h)
}

/// Real Hadamard layer on the given bit positions, identity elsewhere.
pub fn hadamard_on(n: usize, positions: &[usize]) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dim = 1usize << n;
    let mut m = RMat::zeros(dim, dim);
    // build by tensor structure: iterate all (row, col) pairs via bitwise rule
    for row in 0..dim {
        for col in 0..dim {
            let mut amp = 1.0;
            for p in 0..n {
                let rb = (row >> (n - 1 - p)) & 1;
                let cb = (col >> (n - 1 - p)) & 1;
                if positions.contains(&p) {
                    amp *= if rb == 1 && cb == 1 { -s } else { s };
                } else if rb != cb {
                    amp = 0.0;
                    break;
                }
            }
            if amp != 0.0 {
                m[(row, col)] = amp;
            }
        }
    }
    crate::linalg::to_complex(&m)
}

/// Product model for a chain of `n_cnots` CNOT gates of fidelity `f_cnot`.
pub fn cnot_chain_fidelity(n_cnots: u32, f_cnot: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_cnot) {
        return Err(Error::Numerical(format!("f_cnot = {f_cnot} outside [0, 1]")));
    }
    Ok(f_cnot.powi(n_cnots as i32))
}

/// Ordered product of parity gates sharing one ancilla on disjoint data sets.
///
/// When every subset uses odd parity the product must equal the single
/// odd-parity gate over the union; `matches_union` reports that equality to
/// 1e-12 (None when parities are mixed).
pub struct ConcatenatedParity {
    pub operator: RMat,
    pub matches_union: Option<bool>,
}

pub fn concatenated_parity(
    subsets: &[ParityGateSpec],
    register: &[String],
) -> Result<ConcatenatedParity> {
    if subsets.is_empty() {
        return Err(Error::InvalidSpec {
            path: "subsets".into(),
            message: "at least one parity gate required".into(),
        });
    }
    let ancilla = &subsets[0].ancilla;
    let mut seen: std::collections::HashSet<&str> = Default::default();
    for s in subsets {
        if s.ancilla != *ancilla {
            return Err(Error::InvalidSpec {
                path: "subsets".into(),
                message: "all parity gates must share one ancilla".into(),
            });
        }
        for d in &s.data_modes {
            if !seen.insert(d.as_str()) {
                return Err(Error::InvalidSpec {
                    path: "subsets".into(),
                    message: format!("data mode `{d}` appears in two subsets"),
                });
            }
        }
    }
    let dim = 1usize << register.len();
    let mut product = RMat::identity(dim, dim);
    for s in subsets {
        // listed order = time order; applied on the left
        product = ideal_parity_unitary(s, register)? * product;
    }
    let matches_union = if subsets.iter().all(|s| s.parity == Parity::Odd) {
        let union = ParityGateSpec {
            data_modes: subsets.iter().flat_map(|s| s.data_modes.clone()).collect(),
            ancilla: ancilla.clone(),
            parity: Parity::Odd,
        };
        let u = ideal_parity_unitary(&union, register)?;
        Some((&product - &u).abs().max() <= 1e-12)
    } else {
        None
    };
    Ok(ConcatenatedParity { operator: product, matches_union })
}
