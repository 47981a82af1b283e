//! Structured config ingestion: circuit specs, regime-search targets and
//! lattice assignments, all in one TOML schema.
//!
//! Circuit files carry `[[modes]]` and `[[edges]]` tables whose fields are
//! named exactly as in the domain types, plus an optional `provenance` list
//! recording transformations already applied to the spec.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::CircuitSpec;

/// A circuit spec plus the record of reductions applied to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitFile {
    #[serde(flatten)]
    pub spec: CircuitSpec,
    /// Names of transformations already applied, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

impl CircuitFile {
    pub fn new(spec: CircuitSpec) -> Self {
        CircuitFile { spec, provenance: Vec::new() }
    }
}

/// One qubit row of a lattice frequency assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeQubit {
    pub name: String,
    /// GHz
    pub freq: f64,
    /// GHz
    pub anharm: f64,
}

/// One unit cell: a named ancilla plus its data-qubit members.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeCell {
    pub ancilla: String,
    pub members: Vec<String>,
}

/// Qubit frequency tessellation over a surface, with optional cell membership.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeFile {
    pub qubits: Vec<LatticeQubit>,
    #[serde(default)]
    pub cells: Vec<LatticeCell>,
}

impl LatticeFile {
    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::HashSet::new();
        for (i, q) in self.qubits.iter().enumerate() {
            if !names.insert(q.name.clone()) {
                return Err(Error::InvalidSpec {
                    path: format!("qubits[{i}].name"),
                    message: format!("duplicate qubit name `{}`", q.name),
                });
            }
        }
        for (i, c) in self.cells.iter().enumerate() {
            if !names.contains(&c.ancilla) {
                return Err(Error::InvalidSpec {
                    path: format!("cells[{i}].ancilla"),
                    message: format!("unknown qubit `{}`", c.ancilla),
                });
            }
            for m in &c.members {
                if !names.contains(m) {
                    return Err(Error::InvalidSpec {
                        path: format!("cells[{i}].members"),
                        message: format!("unknown qubit `{m}`"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A search box for one scalar parameter of a circuit spec.
///
/// `param` addresses are `freq:<mode>`, `anharm:<mode>` or `g:<a>:<b>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamBound {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
}

/// Regime-search target: which ancilla-data pairs must share `target_chi`,
/// how tightly, and how strongly everything else must be suppressed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeTargetFile {
    /// Base circuit the bounds perturb.
    pub circuit: CircuitSpec,
    /// Mode-name subsets (each must include the ancilla) whose shifts are driven
    /// to `target_chi`.
    pub target_pairs: Vec<Vec<String>>,
    /// MHz
    pub target_chi: f64,
    /// Relative equality tolerance among the target pairs.
    #[serde(default = "default_equal_tol")]
    pub equal_tol: f64,
    /// MHz cap on every non-target shift.
    #[serde(default = "default_unwanted_cap")]
    pub unwanted_cap: f64,
    #[serde(default)]
    pub bounds: Vec<ParamBound>,
}

fn default_equal_tol() -> f64 {
    0.02
}

fn default_unwanted_cap() -> f64 {
    0.5
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::InvalidSpec {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_circuit(path: &Path) -> Result<CircuitFile> {
    let file: CircuitFile = parse_toml(path)?;
    file.spec.validate()?;
    Ok(file)
}

pub fn load_lattice(path: &Path) -> Result<LatticeFile> {
    let file: LatticeFile = parse_toml(path)?;
    file.validate()?;
    Ok(file)
}

pub fn load_regime_target(path: &Path) -> Result<RegimeTargetFile> {
    let file: RegimeTargetFile = parse_toml(path)?;
    file.circuit.validate()?;
    Ok(file)
}

pub fn save_circuit(path: &Path, file: &CircuitFile) -> Result<()> {
    let text = toml::to_string_pretty(file).map_err(|e| Error::InvalidSpec {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeRole, ModeSpec};

    #[test]
    fn circuit_roundtrip() {
        let file = CircuitFile::new(CircuitSpec {
            modes: vec![
                ModeSpec { name: "a".into(), role: ModeRole::Ancilla, freq: 4.95, anharm: -0.3, levels: 3 },
                ModeSpec { name: "q2".into(), role: ModeRole::Data, freq: 5.28, anharm: -0.2, levels: 3 },
            ],
            edges: vec![crate::fock::CouplingEdge { a: "a".into(), b: "q2".into(), g: 0.02165 }],
        });
        let text = toml::to_string_pretty(&file).unwrap();
        let parsed: CircuitFile = toml::from_str(&text).unwrap();
        assert_eq!(parsed.spec.modes.len(), 2);
        assert_eq!(parsed.spec.edges[0].g, 0.02165);
        assert!(parsed.provenance.is_empty());
    }

    #[test]
    fn bad_field_reports_path() {
        let text = "[[modes]]\nname = \"a\"\nrole = \"ancilla\"\nfreq = 4.95\nanharm = -0.3\nlevels = 1\n";
        let file: CircuitFile = toml::from_str(text).unwrap();
        let err = file.spec.validate().unwrap_err();
        assert!(err.to_string().contains("levels"));
    }
}
