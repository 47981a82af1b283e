// Development scratch: regime search around the reference couplings, then the
// gate and decoherence on the tuned spec.
use parity_core::dynamics::*;
use parity_core::exec::Execution;
use parity_core::fock::{CircuitSpec, CouplingEdge, ModeRole, ModeSpec};
use parity_core::regimes::*;
use parity_core::shifts::{shift_table, ShiftOptions};
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
    let base = table1();
    let target = RegimeTarget {
        target_pairs: vec![vec![0, 1], vec![0, 2], vec![0, 3]],
        target_chi_mhz: -5.0,
        equal_tol: 0.02,
        unwanted_cap_mhz: 0.5,
        bounds: vec![
            (ParamKey::Coupling(0, 1), 0.02165 * 0.9, 0.02165 * 1.1),
            (ParamKey::Coupling(0, 2), 0.032 * 0.9, 0.032 * 1.1),
            (ParamKey::Coupling(0, 3), 0.0385 * 0.9, 0.0385 * 1.1),
        ],
    };
    let t0 = std::time::Instant::now();
    let result = regime_search(&base, &target, &SearchOptions::default(), Execution::Parallel).unwrap();
    println!("search: {:?}  J = {:.3e}  verdict: {:?}", t0.elapsed(), result.best_objective, result.verdict);
    for e in &result.best_spec.edges {
        println!("  g({}, {}) = {:.6}", e.a, e.b, e.g);
    }
    let table = shift_table(&result.best_spec, ShiftOptions::default(), Execution::Parallel).unwrap();
    print!("{}", table.to_csv());

    // tuned gate, rotating frame
    let drives = parity_drives(&result.best_spec, 0.00159, Parity::Odd).unwrap();
    for d in &drives {
        println!("drive {:.6}", d.freq);
    }
    let prop = propagate_unitary(&result.best_spec, &drives, 600.0, 40.0, Frame::Rotating, Execution::Parallel).unwrap();
    let score = score_gate(&prop, IdealGate::Parity(Parity::Odd), 42).unwrap();
    println!(
        "TUNED GATE: F_raw={:.5} F_local={:.5} F_perfect={:.5} leak_out={:.6} in_err={:.6}",
        score.fidelity_raw, score.fidelity_corrected, score.fidelity_perfect_phase,
        score.leakage_out_avg, score.in_subspace_error_avg,
    );

    let t0 = std::time::Instant::now();
    let dec = decohered_fidelity(
        &result.best_spec, &drives, 600.0, 200.0, Frame::Rotating,
        &[100.0, 100.0, 100.0, 100.0], IdealGate::Parity(Parity::Odd), 42, Execution::Parallel,
    ).unwrap();
    println!(
        "TUNED DECOHERED (dt=200ps, {:?}): basis_avg={:.5} channel={:.5} coherent={:.5} deficit={:.5}",
        t0.elapsed(), dec.fidelity_basis_avg, dec.fidelity_channel, dec.coherent_fidelity, dec.deficit
    );

    // dt halving check on the corrected fidelity
    let prop2 = propagate_unitary(&result.best_spec, &drives, 600.0, 20.0, Frame::Rotating, Execution::Parallel).unwrap();
    let score2 = score_gate(&prop2, IdealGate::Parity(Parity::Odd), 42).unwrap();
    println!(
        "dt halving drift: perfect {:.2e} local {:.2e}",
        (score.fidelity_perfect_phase - score2.fidelity_perfect_phase).abs(),
        (score.fidelity_corrected - score2.fidelity_corrected).abs()
    );
}
