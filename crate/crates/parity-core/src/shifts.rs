//! n-body dispersive shifts from exact labeled spectra and from numeric
//! Rayleigh-Schrodinger perturbation theory, including the bare/full
//! subset recursion.
//!
//! A "bare" shift of a subset S is the alternating energy sum
//! `E(all of S excited) - sum_i E(only i excited) + (|S|-1) E(ground)`;
//! the "full" shift subtracts every lower-order full shift of the strict
//! subsets of size >= 2, so the full shifts are exactly the coefficients of
//! the product-of-occupations expansion of the computational energies.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fock::{assemble_on_basis, BasisLabel, BasisSet, CircuitSpec};
use crate::linalg::{eigh, RMat};

/// Minimum acceptable probability of an eigenvector on its assigned bare label.
pub const OVERLAP_FLOOR: f64 = 0.5;

/// Default denominator floor for perturbation theory, in GHz (10 MHz).
pub const PT_DENOMINATOR_FLOOR: f64 = 0.010;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumEntry {
    /// GHz
    pub energy: f64,
    /// Probability of the assigned eigenvector on the bare label.
    pub overlap: f64,
}

/// Map from bare labels to assigned eigen-energies.
#[derive(Debug, Clone)]
pub struct LabeledSpectrum {
    entries: BTreeMap<BasisLabel, SpectrumEntry>,
}

impl LabeledSpectrum {
    pub fn energy(&self, label: &BasisLabel) -> Result<f64> {
        self.entries
            .get(label)
            .map(|e| e.energy)
            .ok_or_else(|| Error::MissingLabel(label.to_string()))
    }

    pub fn entry(&self, label: &BasisLabel) -> Option<&SpectrumEntry> {
        self.entries.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &SpectrumEntry)> {
        self.entries.iter()
    }

    pub fn from_entries(entries: BTreeMap<BasisLabel, SpectrumEntry>) -> Self {
        LabeledSpectrum { entries }
    }
}

/// Labeled spectrum plus the underlying eigensystem, for consumers that need
/// the assigned eigenvectors themselves (subspace projection, propagators).
#[derive(Debug, Clone)]
pub struct LabeledEigensystem {
    pub spectrum: LabeledSpectrum,
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: RMat,
    /// label -> eigenvector column index
    pub assignment: BTreeMap<BasisLabel, usize>,
}

/// Assign eigenvectors of `h` (on `basis`) to the requested bare labels by
/// maximum overlap, greedily resolving conflicts by descending overlap.
///
/// Rejects with [`Error::NonDispersiveLabel`] if any assignment has
/// probability below 0.5 on its label.
pub fn labeled_spectrum(h: &RMat, basis: &BasisSet, labels: &[BasisLabel]) -> Result<LabeledSpectrum> {
    Ok(labeled_eigensystem(h, basis, labels)?.spectrum)
}

pub fn labeled_eigensystem(
    h: &RMat,
    basis: &BasisSet,
    labels: &[BasisLabel],
) -> Result<LabeledEigensystem> {
    let (vals, vecs) = eigh(h)?;
    let rows: Vec<usize> = labels
        .iter()
        .map(|l| basis.index(l).ok_or_else(|| Error::MissingLabel(l.to_string())))
        .collect::<Result<_>>()?;

    // all candidate (probability, label position, eigenvector column) pairs
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(labels.len() * basis.len());
    for (li, &row) in rows.iter().enumerate() {
        for col in 0..basis.len() {
            let amp = vecs[(row, col)];
            let p = amp * amp;
            if p > 1e-12 {
                candidates.push((p, li, col));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut label_used = vec![false; labels.len()];
    let mut col_used = vec![false; basis.len()];
    let mut assignment: BTreeMap<BasisLabel, usize> = BTreeMap::new();
    let mut entries: BTreeMap<BasisLabel, SpectrumEntry> = BTreeMap::new();
    let mut worst: Option<(f64, usize)> = None;
    for (p, li, col) in candidates {
        if label_used[li] || col_used[col] {
            continue;
        }
        label_used[li] = true;
        col_used[col] = true;
        if p < OVERLAP_FLOOR && worst.map_or(true, |(wp, _)| p < wp) {
            worst = Some((p, li));
        }
        assignment.insert(labels[li].clone(), col);
        entries.insert(labels[li].clone(), SpectrumEntry { energy: vals[col], overlap: p });
    }
    for (li, used) in label_used.iter().enumerate() {
        if !used {
            return Err(Error::NonDispersiveLabel { label: labels[li].to_string(), overlap: 0.0 });
        }
    }
    if let Some((p, li)) = worst {
        return Err(Error::NonDispersiveLabel { label: labels[li].to_string(), overlap: p });
    }
    Ok(LabeledEigensystem { spectrum: LabeledSpectrum { entries }, eigenvalues: vals, eigenvectors: vecs, assignment })
}

/// Label with occupation 1 on `subset` (indices into the mode list), 0 elsewhere.
pub fn subset_label(n_modes: usize, subset: &[usize]) -> BasisLabel {
    let mut occ = vec![0u8; n_modes];
    for &i in subset {
        occ[i] = 1;
    }
    BasisLabel(occ)
}

/// Bare dispersive shift of `subset`, in MHz: the alternating sum
/// `E(1_S) - sum_i E(1_i) + (|S|-1) E(0)`.
pub fn bare_shift(spectrum: &LabeledSpectrum, n_modes: usize, subset: &[usize]) -> Result<f64> {
    let ground = spectrum.energy(&subset_label(n_modes, &[]))?;
    let mut chi = spectrum.energy(&subset_label(n_modes, subset))?;
    for &i in subset {
        chi -= spectrum.energy(&subset_label(n_modes, &[i]))?;
    }
    chi += (subset.len() as f64 - 1.0) * ground;
    Ok(chi * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftRow {
    pub chi_bare_mhz: f64,
    pub chi_full_mhz: f64,
}

/// One row of a shift table flattened for reports.
#[derive(Debug, Clone, Serialize)]
pub struct ShiftReportRow {
    pub subset: String,
    pub chi_bare_mhz: f64,
    pub chi_full_mhz: f64,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMethod {
    Exact,
    /// Rayleigh-Schrodinger perturbation theory to the recorded order.
    Pt(u8),
}

impl std::fmt::Display for ShiftMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShiftMethod::Exact => write!(f, "exact"),
            ShiftMethod::Pt(order) => write!(f, "pt{order}"),
        }
    }
}

/// Map from unordered mode subsets to their bare and full dispersive shifts.
#[derive(Debug, Clone)]
pub struct ShiftTable {
    /// Keyed by sorted mode indices into the originating spec.
    pub rows: BTreeMap<Vec<usize>, ShiftRow>,
    pub method: ShiftMethod,
    /// Mode names, indexed like the subset keys.
    pub mode_names: Vec<String>,
}

impl ShiftTable {
    pub fn get(&self, subset: &[usize]) -> Option<&ShiftRow> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        self.rows.get(&key)
    }

    pub fn subset_name(&self, subset: &[usize]) -> String {
        subset
            .iter()
            .map(|&i| self.mode_names[i].as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Rows sorted by subset size then lexicographically, for stable output.
    pub fn sorted_rows(&self) -> Vec<(&Vec<usize>, &ShiftRow)> {
        let mut rows: Vec<_> = self.rows.iter().collect();
        rows.sort_by(|a, b| (a.0.len(), a.0.clone()).cmp(&(b.0.len(), b.0.clone())));
        rows
    }

    pub fn report_rows(&self) -> Vec<ShiftReportRow> {
        self.sorted_rows()
            .into_iter()
            .map(|(subset, row)| ShiftReportRow {
                subset: self.subset_name(subset),
                chi_bare_mhz: row.chi_bare_mhz,
                chi_full_mhz: row.chi_full_mhz,
                method: self.method.to_string(),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subset,chi_bare_mhz,chi_full_mhz,method\n");
        for (subset, row) in self.sorted_rows() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                self.subset_name(subset),
                row.chi_bare_mhz,
                row.chi_full_mhz,
                self.method
            ));
        }
        out
    }
}

/// Full shift of `subset` given every strict sub-subset of size >= 2 already
/// in `lower`: `full(S) = bare(S) - sum_{T strictly inside S, |T| >= 2} full(T)`.
pub fn full_shift(lower: &BTreeMap<Vec<usize>, ShiftRow>, subset: &[usize], bare_mhz: f64) -> Result<f64> {
    let mut full = bare_mhz;
    for sub in strict_subsets_ge2(subset) {
        let row = lower.get(&sub).ok_or_else(|| {
            Error::MissingSubset(sub.iter().map(|i| i.to_string()).collect())
        })?;
        full -= row.chi_full_mhz;
    }
    Ok(full)
}

/// All strict subsets of `subset` with at least two elements, sorted.
fn strict_subsets_ge2(subset: &[usize]) -> Vec<Vec<usize>> {
    let n = subset.len();
    let mut out = Vec::new();
    for mask in 1u32..((1 << n) - 1) {
        if mask.count_ones() >= 2 {
            let mut s: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| subset[i]).collect();
            s.sort_unstable();
            out.push(s);
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ShiftOptions {
    pub method: ShiftMethod,
    /// Diagonalize under a global excitation cutoff instead of the full basis
    /// (for large unit cells).
    pub cutoff: Option<u32>,
    /// GHz; refuse perturbation theory when an encountered denominator is smaller.
    pub pt_floor: f64,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        ShiftOptions { method: ShiftMethod::Exact, cutoff: None, pt_floor: PT_DENOMINATOR_FLOOR }
    }
}

/// Compute bare and full shifts for every subset (size >= 2) of the
/// non-coupler modes of `spec`.
pub fn shift_table(spec: &CircuitSpec, opts: ShiftOptions, exec: Execution) -> Result<ShiftTable> {
    let logical = spec.logical_mode_indices();
    if logical.len() < 2 {
        return Err(Error::InvalidSpec {
            path: "modes".into(),
            message: "shift table needs at least 2 non-coupler modes".into(),
        });
    }
    let n_modes = spec.modes.len();

    // every computational label over the logical modes (couplers stay at 0)
    let mut labels = Vec::new();
    for mask in 0u32..(1 << logical.len()) {
        let subset: Vec<usize> = logical
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &m)| m)
            .collect();
        labels.push(subset_label(n_modes, &subset));
    }

    let spectrum = spectrum_for(spec, &labels, opts, exec)?;

    let mut rows: BTreeMap<Vec<usize>, ShiftRow> = BTreeMap::new();
    for size in 2..=logical.len() {
        // bare shifts of one size are independent given the shared spectrum
        let subsets: Vec<Vec<usize>> = subsets_of_size(&logical, size);
        let bares = exec::map_collect(exec, subsets.clone(), |s| {
            bare_shift(&spectrum, n_modes, &s).map(|b| (s, b))
        });
        for item in bares {
            let (subset, bare) = item?;
            let full = full_shift(&rows, &subset, bare)?;
            rows.insert(subset, ShiftRow { chi_bare_mhz: bare, chi_full_mhz: full });
        }
    }
    Ok(ShiftTable {
        rows,
        method: opts.method,
        mode_names: spec.modes.iter().map(|m| m.name.clone()).collect(),
    })
}

fn subsets_of_size(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = items.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == size {
            let mut s: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| items[i]).collect();
            s.sort_unstable();
            out.push(s);
        }
    }
    out.sort();
    out
}

fn spectrum_for(
    spec: &CircuitSpec,
    labels: &[BasisLabel],
    opts: ShiftOptions,
    exec: Execution,
) -> Result<LabeledSpectrum> {
    let basis = match opts.cutoff {
        Some(c) => BasisSet::with_cutoff(spec, c)?,
        None => BasisSet::full(spec)?,
    };
    for l in labels {
        if !basis.contains(l) {
            return Err(Error::MissingLabel(l.to_string()));
        }
    }
    match opts.method {
        ShiftMethod::Exact => {
            let h = assemble_on_basis(spec, &basis, false)?;
            labeled_spectrum(&h, &basis, labels)
        }
        ShiftMethod::Pt(order) => pt_energies_on_basis(spec, &basis, labels, order, opts.pt_floor, exec),
    }
}

/// Numeric non-degenerate Rayleigh-Schrodinger energies for the requested
/// labels, to the given order (2..=4). The unperturbed Hamiltonian is the
/// g = 0 diagonal; the perturbation is every coupling term.
///
/// A denominator smaller than `floor` (GHz) with a nonvanishing coupling path
/// is refused rather than summed, naming the near-degenerate pair.
pub fn pt_energies(
    spec: &CircuitSpec,
    labels: &[BasisLabel],
    order: u8,
    exec: Execution,
) -> Result<LabeledSpectrum> {
    let basis = BasisSet::full(spec)?;
    pt_energies_on_basis(spec, &basis, labels, order, PT_DENOMINATOR_FLOOR, exec)
}

pub fn pt_energies_on_basis(
    spec: &CircuitSpec,
    basis: &BasisSet,
    labels: &[BasisLabel],
    order: u8,
    floor: f64,
    exec: Execution,
) -> Result<LabeledSpectrum> {
    if !(2..=4).contains(&order) {
        return Err(Error::Numerical(format!("perturbation order {order} not in 2..=4")));
    }
    let h = assemble_on_basis(spec, basis, false)?;
    let d = basis.len();
    let e0: Vec<f64> = (0..d).map(|i| h[(i, i)]).collect();
    // the interaction is strictly off-diagonal in the Fock basis
    let mut v = h.clone();
    for i in 0..d {
        v[(i, i)] = 0.0;
    }

    let per_label = exec::map_collect(exec, labels.to_vec(), |label| -> Result<(BasisLabel, f64)> {
        let s = basis
            .index(&label)
            .ok_or_else(|| Error::MissingLabel(label.to_string()))?;
        let es = e0[s];
        let mut w = DVector::zeros(d);
        for m in 0..d {
            if m == s {
                continue;
            }
            let vm = v[(s, m)];
            if vm == 0.0 {
                continue;
            }
            let delta = es - e0[m];
            if delta.abs() < floor {
                return Err(Error::SmallDenominator {
                    a: label.to_string(),
                    b: basis.label(m).to_string(),
                    denom_mhz: delta.abs() * 1e3,
                    floor_mhz: floor * 1e3,
                });
            }
            w[m] = vm / delta;
        }
        let mut energy = es;
        // second order: sum_m |V_sm|^2 / (E_s - E_m)
        let e2: f64 = (0..d).map(|m| v[(s, m)] * w[m]).sum();
        energy += e2;
        if order >= 3 {
            // third order: w^T V w, the s components of w vanish by construction
            let t = &v * &w;
            let e3: f64 = w.dot(&t);
            energy += e3;
            if order >= 4 {
                let mut e4a = 0.0;
                for n in 0..d {
                    if n == s || t[n] == 0.0 {
                        continue;
                    }
                    let delta = es - e0[n];
                    if delta.abs() < floor {
                        return Err(Error::SmallDenominator {
                            a: label.to_string(),
                            b: basis.label(n).to_string(),
                            denom_mhz: delta.abs() * 1e3,
                            floor_mhz: floor * 1e3,
                        });
                    }
                    e4a += t[n] * t[n] / delta;
                }
                let e4 = e4a - e2 * w.dot(&w);
                energy += e4;
            }
        }
        Ok((label, energy))
    });

    let mut entries = BTreeMap::new();
    for item in per_label {
        let (label, energy) = item?;
        entries.insert(label, SpectrumEntry { energy, overlap: 1.0 });
    }
    Ok(LabeledSpectrum { entries })
}

/// Closed-form second-order pairwise shift between modes `i` and `j`, in MHz.
///
/// The nine-term expansion per pair; the trailing `+/- g^2/Sigma` and
/// `+/- g^2/Delta` pairs cancel identically and are kept only so a vanishing
/// `Delta` or `Sigma` is still refused.
pub fn pairwise_shift_second_order(spec: &CircuitSpec, i: &str, j: &str) -> Result<f64> {
    let mi = spec.mode(i)?;
    let mj = spec.mode(j)?;
    let g = spec.edge_between(i, j).map_or(0.0, |e| e.g);
    let delta = mi.freq - mj.freq;
    let sigma = mi.freq + mj.freq;
    let (ai, aj) = (mi.anharm, mj.anharm);

    let denoms = [
        ("alpha_i + alpha_j + Sigma", ai + aj + sigma),
        ("alpha_i + Sigma", ai + sigma),
        ("alpha_i + Delta", ai + delta),
        ("alpha_j + Sigma", aj + sigma),
        ("alpha_j - Delta", aj - delta),
        ("Sigma", sigma),
        ("Delta", delta),
    ];
    for (name, d) in denoms {
        if d.abs() < 1e-3 {
            return Err(Error::SmallDenominator {
                a: format!("{i} ({name})"),
                b: j.to_string(),
                denom_mhz: d.abs() * 1e3,
                floor_mhz: 1.0,
            });
        }
    }

    let g2 = g * g;
    let chi = -4.0 * g2 / (ai + aj + sigma) + 2.0 * g2 / (ai + sigma) - 2.0 * g2 / (ai + delta)
        + 2.0 * g2 / (aj + sigma)
        - 2.0 * g2 / (aj - delta);
    let cancelling = -g2 / sigma - g2 / delta + g2 / delta + g2 / sigma;
    Ok((chi + cancelling) * 1e3)
}
