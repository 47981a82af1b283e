//! Truncated multi-mode bosonic operator algebra and Hamiltonian assembly.
//!
//! A [`CircuitSpec`] is a list of modes (data qubits, ancilla, couplers) plus
//! capacitive coupling edges. Hamiltonians are assembled in the bare Fock
//! product basis, in plain-frequency GHz units; the factor 2*pi is applied
//! only inside time propagators.
//!
//! Basis convention: row-major with the first listed mode as the most
//! significant digit, so for four 3-level modes `|1000>` has index 27.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMat;

/// Default refusal cap on the number of basis states for full-space operations.
pub const DEFAULT_DIM_CAP: usize = 200_000;

/// Largest dimension for which dense full-space matrices are materialized.
/// Larger systems must go through an excitation-cutoff [`BasisSet`].
pub const DENSE_LIMIT: usize = 8_192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRole {
    Data,
    Ancilla,
    Coupler,
}

/// One bosonic mode: transition frequency, anharmonicity and Fock truncation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSpec {
    pub name: String,
    pub role: ModeRole,
    /// Transition frequency in GHz.
    pub freq: f64,
    /// Anharmonicity in GHz, typically negative.
    pub anharm: f64,
    /// Fock truncation: number of retained levels, at least 2.
    pub levels: u8,
}

/// Capacitive coupling between two modes, `g (a - a^dag)(b - b^dag)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingEdge {
    pub a: String,
    pub b: String,
    /// Coupling strength in GHz.
    pub g: f64,
}

/// Mode list plus coupling edges. Both the full unit cell and the reduced
/// effective model are instances of this type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub edges: Vec<CouplingEdge>,
}

/// Occupation-number label of one product basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel(pub Vec<u8>);

impl BasisLabel {
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    /// True when every occupation is 0 or 1.
    pub fn is_computational(&self) -> bool {
        self.0.iter().all(|&n| n <= 1)
    }
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl CircuitSpec {
    pub fn mode_index(&self, name: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMode(name.to_string()))
    }

    pub fn mode(&self, name: &str) -> Result<&ModeSpec> {
        Ok(&self.modes[self.mode_index(name)?])
    }

    pub fn levels(&self) -> Vec<u8> {
        self.modes.iter().map(|m| m.levels).collect()
    }

    /// Total Hilbert dimension, product of per-mode level counts.
    pub fn dimension(&self) -> Result<usize> {
        let mut d: usize = 1;
        for m in &self.modes {
            d = d
                .checked_mul(m.levels as usize)
                .ok_or(Error::DimensionCap { dim: usize::MAX, cap: DEFAULT_DIM_CAP })?;
        }
        Ok(d)
    }

    /// Indices of non-coupler modes, in listing order.
    pub fn logical_mode_indices(&self) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.role != ModeRole::Coupler)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ancilla_indices(&self) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.role == ModeRole::Ancilla)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn edge_between(&self, a: &str, b: &str) -> Option<&CouplingEdge> {
        self.edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// Validate the spec. Returns non-fatal warnings (e.g. positive anharmonicity).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.modes.is_empty() {
            return Err(Error::InvalidSpec {
                path: "modes".into(),
                message: "at least one mode required".into(),
            });
        }
        let mut seen = HashMap::new();
        for (i, m) in self.modes.iter().enumerate() {
            let path = format!("modes[{i}]");
            if m.levels < 2 {
                return Err(Error::InvalidSpec {
                    path: format!("{path}.levels"),
                    message: format!("levels = {} but must be >= 2", m.levels),
                });
            }
            if !(m.freq > 0.0) || !m.freq.is_finite() {
                return Err(Error::InvalidSpec {
                    path: format!("{path}.freq"),
                    message: format!("freq = {} but must be positive and finite", m.freq),
                });
            }
            if !m.anharm.is_finite() {
                return Err(Error::InvalidSpec {
                    path: format!("{path}.anharm"),
                    message: "anharm must be finite".into(),
                });
            }
            if m.anharm > 0.0 {
                warnings.push(format!(
                    "mode `{}` has positive anharmonicity {} GHz",
                    m.name, m.anharm
                ));
            }
            if let Some(prev) = seen.insert(m.name.clone(), i) {
                return Err(Error::InvalidSpec {
                    path: format!("{path}.name"),
                    message: format!("duplicate mode name `{}` (also modes[{prev}])", m.name),
                });
            }
        }
        let mut pairs = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            let path = format!("edges[{i}]");
            if e.a == e.b {
                return Err(Error::InvalidSpec {
                    path,
                    message: format!("self-coupling on `{}`", e.a),
                });
            }
            self.mode_index(&e.a)?;
            self.mode_index(&e.b)?;
            let mut key = [e.a.clone(), e.b.clone()];
            key.sort();
            if pairs.insert(key.clone(), i).is_some() {
                return Err(Error::InvalidSpec {
                    path,
                    message: format!("duplicate edge between `{}` and `{}`", e.a, e.b),
                });
            }
            if !e.g.is_finite() {
                return Err(Error::InvalidSpec {
                    path: format!("{path}.g"),
                    message: "coupling must be finite".into(),
                });
            }
        }
        Ok(warnings)
    }
}

/// An enumerated set of basis labels with an index lookup. Either the full
/// product basis or the subspace with total occupation below a cutoff.
#[derive(Debug, Clone)]
pub struct BasisSet {
    levels: Vec<u8>,
    labels: Vec<BasisLabel>,
    index_of: HashMap<BasisLabel, usize>,
}

impl BasisSet {
    /// Full product basis in row-major order (first mode most significant).
    pub fn full(spec: &CircuitSpec) -> Result<Self> {
        Self::full_with_cap(spec, DEFAULT_DIM_CAP)
    }

    pub fn full_with_cap(spec: &CircuitSpec, cap: usize) -> Result<Self> {
        let dim = spec.dimension()?;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Self::enumerate(spec, None)
    }

    /// Basis restricted to labels with total occupation at most `max_total`,
    /// keeping the full-basis ordering.
    pub fn with_cutoff(spec: &CircuitSpec, max_total: u32) -> Result<Self> {
        Self::enumerate(spec, Some(max_total))
    }

    fn enumerate(spec: &CircuitSpec, max_total: Option<u32>) -> Result<Self> {
        let levels = spec.levels();
        let mut labels = Vec::new();
        let mut current = vec![0u8; levels.len()];
        loop {
            let total: u32 = current.iter().map(|&n| n as u32).sum();
            if max_total.map_or(true, |c| total <= c) {
                labels.push(BasisLabel(current.clone()));
            }
            // odometer increment, last mode least significant
            let mut pos = levels.len();
            loop {
                if pos == 0 {
                    let index_of = labels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (l.clone(), i))
                        .collect();
                    return Ok(BasisSet { levels, labels, index_of });
                }
                pos -= 1;
                current[pos] += 1;
                if current[pos] < levels[pos] {
                    break;
                }
                current[pos] = 0;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &BasisLabel {
        &self.labels[index]
    }

    pub fn index(&self, label: &BasisLabel) -> Option<usize> {
        self.index_of.get(label).copied()
    }

    pub fn contains(&self, label: &BasisLabel) -> bool {
        self.index_of.contains_key(label)
    }

    fn check_label(&self, spec: &CircuitSpec, label: &BasisLabel) -> Result<()> {
        if label.0.len() != self.levels.len() {
            return Err(Error::DimensionMismatch(label.0.len(), self.levels.len()));
        }
        for (k, (&n, &lv)) in label.0.iter().zip(&self.levels).enumerate() {
            if n >= lv {
                return Err(Error::OccupationOutOfRange {
                    mode: spec.modes[k].name.clone(),
                    occupation: n,
                    levels: lv,
                });
            }
        }
        Ok(())
    }
}

/// Index of `label` in the full row-major basis of `spec`.
pub fn basis_index(spec: &CircuitSpec, label: &BasisLabel) -> Result<usize> {
    let levels = spec.levels();
    if label.0.len() != levels.len() {
        return Err(Error::DimensionMismatch(label.0.len(), levels.len()));
    }
    let mut idx = 0usize;
    for (k, (&n, &lv)) in label.0.iter().zip(&levels).enumerate() {
        if n >= lv {
            return Err(Error::OccupationOutOfRange {
                mode: spec.modes[k].name.clone(),
                occupation: n,
                levels: lv,
            });
        }
        idx = idx * lv as usize + n as usize;
    }
    Ok(idx)
}

/// Label of basis state `index` in the full row-major basis of `spec`.
pub fn basis_label(spec: &CircuitSpec, index: usize) -> Result<BasisLabel> {
    let levels = spec.levels();
    let dim = spec.dimension()?;
    if index >= dim {
        return Err(Error::DimensionMismatch(index, dim));
    }
    let mut rem = index;
    let mut occ = vec![0u8; levels.len()];
    for k in (0..levels.len()).rev() {
        let lv = levels[k] as usize;
        occ[k] = (rem % lv) as u8;
        rem /= lv;
    }
    Ok(BasisLabel(occ))
}

/// Annihilation operator for `mode`, embedded in the full tensor-product space.
///
/// Nonzero entries sqrt(n) at the mode-local (n-1, n) positions, identity on
/// all other modes.
pub fn build_operators(spec: &CircuitSpec, mode: &str) -> Result<RMat> {
    let basis = BasisSet::full(spec)?;
    if basis.len() > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { dim: basis.len(), limit: DENSE_LIMIT });
    }
    lowering_on_basis(spec, &basis, mode)
}

/// Annihilation operator of `mode` projected onto `basis`.
pub fn lowering_on_basis(spec: &CircuitSpec, basis: &BasisSet, mode: &str) -> Result<RMat> {
    let m = spec.mode_index(mode)?;
    let d = basis.len();
    let mut op = RMat::zeros(d, d);
    for (col, label) in basis.labels().iter().enumerate() {
        let n = label.0[m];
        if n == 0 {
            continue;
        }
        let mut lowered = label.clone();
        lowered.0[m] = n - 1;
        if let Some(row) = basis.index(&lowered) {
            op[(row, col)] = (n as f64).sqrt();
        }
    }
    Ok(op)
}

/// Options for Hamiltonian assembly.
#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Drop counter-rotating interaction terms, keeping `-g (a b^dag + a^dag b)`.
    /// Exists for block-structure testing only; the default keeps the full
    /// `g (a - a^dag)(b - b^dag)` form.
    pub rwa: bool,
    pub dim_cap: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { rwa: false, dim_cap: DEFAULT_DIM_CAP }
    }
}

/// Assemble the circuit Hamiltonian on the full basis, in GHz.
///
/// Diagonal terms are `omega n + (alpha/2) n (n-1)` per mode; each coupling
/// edge contributes `g (a - a^dag)(b - b^dag)`.
pub fn assemble_hamiltonian(spec: &CircuitSpec) -> Result<RMat> {
    assemble_with_options(spec, AssemblyOptions::default())
}

pub fn assemble_with_options(spec: &CircuitSpec, opts: AssemblyOptions) -> Result<RMat> {
    spec.validate()?;
    let basis = BasisSet::full_with_cap(spec, opts.dim_cap)?;
    if basis.len() > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { dim: basis.len(), limit: DENSE_LIMIT });
    }
    assemble_on_basis(spec, &basis, opts.rwa)
}

/// Assemble the Hamiltonian projected onto an arbitrary basis set (typically
/// an excitation-cutoff basis for large unit cells). Couplings to labels
/// outside the basis are dropped.
pub fn assemble_on_basis(spec: &CircuitSpec, basis: &BasisSet, rwa: bool) -> Result<RMat> {
    let d = basis.len();
    let mut h = RMat::zeros(d, d);
    // on-site terms
    for (i, label) in basis.labels().iter().enumerate() {
        basis.check_label(spec, label)?;
        let mut e = 0.0;
        for (m, &n) in label.0.iter().enumerate() {
            let n = n as f64;
            e += spec.modes[m].freq * n + 0.5 * spec.modes[m].anharm * n * (n - 1.0);
        }
        h[(i, i)] = e;
    }
    // interaction terms, built column-wise from the label algebra
    for edge in &spec.edges {
        let ma = spec.mode_index(&edge.a)?;
        let mb = spec.mode_index(&edge.b)?;
        let g = edge.g;
        for (col, label) in basis.labels().iter().enumerate() {
            let na = label.0[ma] as f64;
            let nb = label.0[mb] as f64;
            let mut add = |da: i8, db: i8, amp: f64| {
                let mut target = label.clone();
                let ta = label.0[ma] as i16 + da as i16;
                let tb = label.0[mb] as i16 + db as i16;
                if ta < 0 || tb < 0 {
                    return;
                }
                target.0[ma] = ta as u8;
                target.0[mb] = tb as u8;
                if target.0[ma] >= spec.modes[ma].levels || target.0[mb] >= spec.modes[mb].levels {
                    return;
                }
                if let Some(row) = basis.index(&target) {
                    h[(row, col)] += amp;
                }
            };
            // -g a b^dag  and  -g a^dag b (rotating terms)
            add(-1, 1, -g * na.sqrt() * (nb + 1.0).sqrt());
            add(1, -1, -g * (na + 1.0).sqrt() * nb.sqrt());
            if !rwa {
                // +g a b  and  +g a^dag b^dag (counter-rotating terms)
                add(-1, -1, g * na.sqrt() * nb.sqrt());
                add(1, 1, g * (na + 1.0).sqrt() * (nb + 1.0).sqrt());
            }
        }
    }
    Ok(h)
}

/// Diagonal of the total-occupation operator on `basis`.
pub fn total_number_diagonal(basis: &BasisSet) -> Vec<f64> {
    basis.labels().iter().map(|l| l.total() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_residual, kron};
    use approx::assert_relative_eq;

    fn single_mode(levels: u8, freq: f64, anharm: f64) -> CircuitSpec {
        CircuitSpec {
            modes: vec![ModeSpec {
                name: "m".into(),
                role: ModeRole::Data,
                freq,
                anharm,
                levels,
            }],
            edges: vec![],
        }
    }

    fn two_modes(levels: (u8, u8), g: f64) -> CircuitSpec {
        CircuitSpec {
            modes: vec![
                ModeSpec { name: "m1".into(), role: ModeRole::Data, freq: 5.0, anharm: -0.3, levels: levels.0 },
                ModeSpec { name: "m2".into(), role: ModeRole::Data, freq: 5.3, anharm: -0.2, levels: levels.1 },
            ],
            edges: if g == 0.0 {
                vec![]
            } else {
                vec![CouplingEdge { a: "m1".into(), b: "m2".into(), g }]
            },
        }
    }

    #[test]
    fn qubit_lowering_operator() {
        let spec = single_mode(2, 5.0, 0.0);
        let a = build_operators(&spec, "m").unwrap();
        assert_eq!(a, RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn truncated_boson_lowering() {
        let spec = single_mode(3, 5.0, -0.3);
        let a = build_operators(&spec, "m").unwrap();
        assert_relative_eq!(a[(0, 1)], 1.0);
        assert_relative_eq!(a[(1, 2)], 2.0f64.sqrt());
        assert_eq!(a[(2, 1)], 0.0);
    }

    #[test]
    fn embedded_operator_matches_kronecker_oracle() {
        // two modes, operator on mode 2 must equal I (x) a, checked elementwise
        // against a hand-built Kronecker product
        let spec = two_modes((2, 2), 0.0);
        let a = build_operators(&spec, "m2").unwrap();
        let local = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let oracle = kron(&RMat::identity(2, 2), &local);
        assert_eq!(a, oracle);

        let a1 = build_operators(&spec, "m1").unwrap();
        let oracle1 = kron(&local, &RMat::identity(2, 2));
        assert_eq!(a1, oracle1);
    }

    #[test]
    fn unknown_mode_errors() {
        let spec = single_mode(2, 5.0, 0.0);
        assert!(build_operators(&spec, "nope").is_err());
    }

    #[test]
    fn single_mode_diagonal_energies() {
        let spec = single_mode(3, 5.0, -0.3);
        let h = assemble_hamiltonian(&spec).unwrap();
        assert_relative_eq!(h[(0, 0)], 0.0);
        assert_relative_eq!(h[(1, 1)], 5.0);
        assert_relative_eq!(h[(2, 2)], 9.7, epsilon = 1e-12);
    }

    #[test]
    fn zero_coupling_is_diagonal_with_bare_sums() {
        let spec = two_modes((3, 3), 0.0);
        let h = assemble_hamiltonian(&spec).unwrap();
        let basis = BasisSet::full(&spec).unwrap();
        for (i, label) in basis.labels().iter().enumerate() {
            for j in 0..h.ncols() {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
            let n1 = label.0[0] as f64;
            let n2 = label.0[1] as f64;
            let expect = 5.0 * n1 + 0.5 * (-0.3) * n1 * (n1 - 1.0)
                + 5.3 * n2 + 0.5 * (-0.2) * n2 * (n2 - 1.0);
            assert_relative_eq!(h[(i, i)], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn assembled_hamiltonian_is_hermitian() {
        let spec = two_modes((3, 3), 0.05);
        let h = assemble_hamiltonian(&spec).unwrap();
        assert!(hermiticity_residual(&h) < 1e-12);
    }

    #[test]
    fn interaction_matches_operator_oracle() {
        // g (a - a^dag)(b - b^dag) assembled label-wise must equal the explicit
        // matrix product of embedded operators
        let spec = two_modes((3, 3), 0.07);
        let h = assemble_hamiltonian(&spec).unwrap();
        let h0 = assemble_hamiltonian(&two_modes((3, 3), 0.0)).unwrap();
        let a = build_operators(&spec, "m1").unwrap();
        let b = build_operators(&spec, "m2").unwrap();
        let x = &a - a.transpose();
        let y = &b - b.transpose();
        let oracle = h0 + 0.07 * x * y;
        assert_relative_eq!((h - oracle).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rwa_assembly_commutes_with_total_number() {
        let spec = two_modes((3, 3), 0.07);
        let basis = BasisSet::full(&spec).unwrap();
        let h = assemble_on_basis(&spec, &basis, true).unwrap();
        let n = RMat::from_diagonal(&nalgebra::DVector::from_vec(total_number_diagonal(&basis)));
        let comm = &h * &n - &n * &h;
        assert_relative_eq!(comm.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn basis_index_examples() {
        let spec = CircuitSpec {
            modes: (0..4)
                .map(|i| ModeSpec {
                    name: format!("m{i}"),
                    role: ModeRole::Data,
                    freq: 5.0,
                    anharm: -0.2,
                    levels: 3,
                })
                .collect(),
            edges: vec![],
        };
        assert_eq!(basis_index(&spec, &BasisLabel(vec![0, 0, 0, 0])).unwrap(), 0);
        assert_eq!(basis_index(&spec, &BasisLabel(vec![1, 0, 0, 0])).unwrap(), 27);
        // full round trip over all 81 labels
        for idx in 0..81 {
            let label = basis_label(&spec, idx).unwrap();
            assert_eq!(basis_index(&spec, &label).unwrap(), idx);
        }
        assert!(basis_index(&spec, &BasisLabel(vec![3, 0, 0, 0])).is_err());
    }

    #[test]
    fn cutoff_basis_counts() {
        let spec = CircuitSpec {
            modes: (0..4)
                .map(|i| ModeSpec {
                    name: format!("m{i}"),
                    role: ModeRole::Data,
                    freq: 5.0,
                    anharm: -0.2,
                    levels: 3,
                })
                .collect(),
            edges: vec![],
        };
        let basis = BasisSet::with_cutoff(&spec, 1).unwrap();
        assert_eq!(basis.len(), 5); // vacuum + 4 single excitations
        let basis2 = BasisSet::with_cutoff(&spec, 8).unwrap();
        assert_eq!(basis2.len(), 81);
    }

    #[test]
    fn dimension_cap_refusal() {
        let spec = CircuitSpec {
            modes: (0..12)
                .map(|i| ModeSpec {
                    name: format!("m{i}"),
                    role: ModeRole::Data,
                    freq: 5.0,
                    anharm: -0.2,
                    levels: 3,
                })
                .collect(),
            edges: vec![],
        };
        // 3^12 = 531441 > 200000
        match assemble_hamiltonian(&spec) {
            Err(Error::DimensionCap { dim, cap }) => {
                assert_eq!(dim, 531_441);
                assert_eq!(cap, DEFAULT_DIM_CAP);
            }
            other => panic!("expected DimensionCap, got {other:?}"),
        }
    }

    #[test]
    fn assembly_is_permutation_covariant() {
        // relabeling the mode order conjugates H by the basis permutation
        let spec = CircuitSpec {
            modes: vec![
                ModeSpec { name: "x".into(), role: ModeRole::Data, freq: 5.0, anharm: -0.3, levels: 3 },
                ModeSpec { name: "y".into(), role: ModeRole::Data, freq: 5.3, anharm: -0.2, levels: 2 },
                ModeSpec { name: "z".into(), role: ModeRole::Coupler, freq: 6.5, anharm: -0.1, levels: 3 },
            ],
            edges: vec![
                CouplingEdge { a: "x".into(), b: "y".into(), g: 0.02 },
                CouplingEdge { a: "y".into(), b: "z".into(), g: 0.05 },
                CouplingEdge { a: "x".into(), b: "z".into(), g: 0.04 },
            ],
        };
        // permuted listing (z, x, y)
        let perm = [2usize, 0, 1];
        let spec2 = CircuitSpec {
            modes: perm.iter().map(|&i| spec.modes[i].clone()).collect(),
            edges: spec.edges.clone(),
        };
        let h1 = assemble_hamiltonian(&spec).unwrap();
        let h2 = assemble_hamiltonian(&spec2).unwrap();
        let d = spec.dimension().unwrap();
        let mut p = RMat::zeros(d, d);
        for idx in 0..d {
            let label = basis_label(&spec, idx).unwrap();
            let permuted = BasisLabel(perm.iter().map(|&i| label.0[i]).collect());
            let new_idx = basis_index(&spec2, &permuted).unwrap();
            p[(new_idx, idx)] = 1.0;
        }
        let conjugated = &p * h1 * p.transpose();
        assert_relative_eq!((conjugated - h2).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = two_modes((3, 3), 0.05);
        spec.edges.push(CouplingEdge { a: "m2".into(), b: "m1".into(), g: 0.01 });
        assert!(spec.validate().is_err()); // duplicate unordered pair

        let mut spec = two_modes((3, 3), 0.0);
        spec.modes[0].levels = 1;
        assert!(spec.validate().is_err());

        let mut spec = two_modes((3, 3), 0.0);
        spec.modes[1].name = "m1".into();
        assert!(spec.validate().is_err());

        let mut spec = two_modes((3, 3), 0.0);
        spec.modes[0].anharm = 0.1;
        let warnings = spec.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }
}
