// Development scratch: print the reference-model shift table and spectrum anchors.
use parity_core::exec::Execution;
use parity_core::fock::{BasisLabel, BasisSet, CircuitSpec, CouplingEdge, ModeRole, ModeSpec};
use parity_core::shifts::{labeled_spectrum, shift_table, ShiftMethod, ShiftOptions};

fn table1(levels: u8) -> CircuitSpec {
    let m = |name: &str, role, freq, anharm| ModeSpec {
        name: name.into(),
        role,
        freq,
        anharm,
        levels,
    };
    CircuitSpec {
        modes: vec![
            m("a", ModeRole::Ancilla, 4.95, -0.3),
            m("q2", ModeRole::Data, 5.28, -0.2),
            m("q3", ModeRole::Data, 5.4, -0.2),
            m("q4", ModeRole::Data, 5.48, -0.19),
        ],
        edges: vec![
            CouplingEdge { a: "a".into(), b: "q2".into(), g: 0.02165 },
            CouplingEdge { a: "a".into(), b: "q3".into(), g: 0.032 },
            CouplingEdge { a: "a".into(), b: "q4".into(), g: 0.0385 },
            CouplingEdge { a: "q2".into(), b: "q3".into(), g: 0.001 },
            CouplingEdge { a: "q2".into(), b: "q4".into(), g: 0.001 },
            CouplingEdge { a: "q3".into(), b: "q4".into(), g: 0.001 },
        ],
    }
}

fn main() {
    for levels in [3u8, 4u8] {
        let spec = table1(levels);
        let t0 = std::time::Instant::now();
        let table = shift_table(&spec, ShiftOptions::default(), Execution::Parallel).unwrap();
        println!("--- levels = {levels} ({:?}) ---", t0.elapsed());
        print!("{}", table.to_csv());

        let basis = BasisSet::full(&spec).unwrap();
        let h = parity_core::fock::assemble_hamiltonian(&spec).unwrap();
        let labels: Vec<BasisLabel> = (0..16u8)
            .map(|m| BasisLabel(vec![(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1]))
            .collect();
        let spectrum = labeled_spectrum(&h, &basis, &labels).unwrap();
        let e = |bits: [u8; 4]| spectrum.energy(&BasisLabel(bits.to_vec())).unwrap();
        println!("omega_bar_a  = {:.6}", e([1, 0, 0, 0]) - e([0, 0, 0, 0]));
        println!("omega_d1     = {:.6}", e([1, 1, 0, 0]) - e([0, 1, 0, 0]));
        println!("omega_d2     = {:.6}", e([1, 1, 1, 1]) - e([0, 1, 1, 1]));
    }

    // PT cross-check at order 2, 3, 4 for the pairwise ancilla shifts
    let spec = table1(3);
    for order in [2u8, 3, 4] {
        let t = shift_table(
            &spec,
            ShiftOptions { method: ShiftMethod::Pt(order), ..Default::default() },
            Execution::Parallel,
        )
        .unwrap();
        println!(
            "pt{order}: chi12 = {:.3}, chi13 = {:.3}, chi14 = {:.3}, chi123 = {:.3}",
            t.get(&[0, 1]).unwrap().chi_full_mhz,
            t.get(&[0, 2]).unwrap().chi_full_mhz,
            t.get(&[0, 3]).unwrap().chi_full_mhz,
            t.get(&[0, 1, 2]).unwrap().chi_full_mhz,
        );
    }
}
