// Debug: per-column populations of the projected parity gate.
use parity_core::dynamics::*;
use parity_core::exec::Execution;
use parity_core::fock::{CircuitSpec, CouplingEdge, ModeRole, ModeSpec};
use parity_core::stabilizers::Parity;

fn table1() -> CircuitSpec {
    let m = |name: &str, role, freq, anharm| ModeSpec {
        name: name.into(),
        role,
        freq,
        anharm,
        levels: 3,
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
    let spec = table1();
    let drives = parity_drives(&spec, 0.00159, Parity::Odd).unwrap();
    let prop =
        propagate_unitary(&spec, &drives, 600.0, 40.0, Frame::Rotating, Execution::Parallel)
            .unwrap();
    let proj = project_and_leak(&prop).unwrap();
    let p = &proj.projected;
    // odd parity: ancilla flips when data weight is odd; label bit order (a,q2,q3,q4)
    for c in 0..16usize {
        let data_weight = (c & 0b0111).count_ones();
        let target = if data_weight % 2 == 1 { c ^ 0b1000 } else { c };
        let t_pop = p[(target, c)].norm_sqr();
        let self_pop = p[(c, c)].norm_sqr();
        let mut max_other = (0usize, 0.0f64);
        for r in 0..16 {
            if r != target {
                let v = p[(r, c)].norm_sqr();
                if v > max_other.1 {
                    max_other = (r, v);
                }
            }
        }
        println!(
            "col {c:04b}: target {target:04b} pop {t_pop:.4}  self {self_pop:.4}  max_other {:04b} {:.4}  leak {:.5}",
            max_other.0, max_other.1, proj.leakage_per_column[c]
        );
    }
}
