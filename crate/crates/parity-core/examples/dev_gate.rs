// Development scratch: two-drive parity gate on the reference model.
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
    for d in &drives {
        println!("drive: {:.6} GHz amp {} target {}", d.freq, d.amp, d.target);
    }
    println!("omega_bar_a = {:.6}", dressed_ancilla_freq(&spec).unwrap());

    for (dt_ps, label) in [(40.0, "dt=40ps"), (20.0, "dt=20ps")] {
        let t0 = std::time::Instant::now();
        let prop = propagate_unitary(&spec, &drives, 600.0, dt_ps, Frame::Rotating, Execution::Parallel)
            .unwrap();
        let score = score_gate(&prop, IdealGate::Parity(Parity::Odd), 42).unwrap();
        println!(
            "ROT {label}: t={:?} F_raw={:.5} F_local={:.5} F_perfect={:.5} leak_out={:.6} in_err={:.6} unit_resid={:.2e}",
            t0.elapsed(),
            score.fidelity_raw,
            score.fidelity_corrected,
            score.fidelity_perfect_phase,
            score.leakage_out_avg,
            score.in_subspace_error_avg,
            prop.unitarity_residual,
        );
    }

    // decoherence, rotating frame
    let t0 = std::time::Instant::now();
    let dec = decohered_fidelity(
        &spec,
        &drives,
        600.0,
        40.0,
        Frame::Rotating,
        &[100.0, 100.0, 100.0, 100.0],
        IdealGate::Parity(Parity::Odd),
        42,
        Execution::Parallel,
    )
    .unwrap();
    println!(
        "DECOHERED: t={:?} basis_avg={:.5} channel={:.5} coherent={:.5} deficit={:.5} trace_err={:.2e}",
        t0.elapsed(),
        dec.fidelity_basis_avg,
        dec.fidelity_channel,
        dec.coherent_fidelity,
        dec.deficit,
        dec.max_trace_error
    );

    // lab frame, shorter segment for cross-check + full run timing estimate
    let t0 = std::time::Instant::now();
    let prop_lab =
        propagate_unitary(&spec, &drives, 60.0, 1.0, Frame::Lab, Execution::Parallel).unwrap();
    let el = t0.elapsed();
    let prop_rot =
        propagate_unitary(&spec, &drives, 60.0, 40.0, Frame::Rotating, Execution::Parallel).unwrap();
    let score_lab = score_gate(&prop_lab, IdealGate::Parity(Parity::Odd), 42).unwrap();
    let score_rot = score_gate(&prop_rot, IdealGate::Parity(Parity::Odd), 42).unwrap();
    println!(
        "LAB 60ns: t={el:?} (x10 for 600ns) F_perfect lab={:.6} rot={:.6} diff={:.2e}",
        score_lab.fidelity_perfect_phase,
        score_rot.fidelity_perfect_phase,
        (score_lab.fidelity_perfect_phase - score_rot.fidelity_perfect_phase).abs()
    );
}
