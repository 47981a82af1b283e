//! Criterion benches comparing the sequential and rayon paths of the
//! data-parallel inner loops: candidate sweeps, shift tables and basis-column
//! propagation.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use parity_core::dynamics::{parity_drives, propagate_unitary, Frame};
use parity_core::exec::Execution;
use parity_core::fock::{CircuitSpec, CouplingEdge, ModeRole, ModeSpec};
use parity_core::regimes::{regime_objective, RegimeTarget};
use parity_core::shifts::{shift_table, ShiftOptions};
use parity_core::stabilizers::Parity;

fn reference_model() -> CircuitSpec {
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

fn bench_shift_table(c: &mut Criterion) {
    let spec = reference_model();
    let mut group = c.benchmark_group("shift_table");
    group.sample_size(20);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| shift_table(&spec, ShiftOptions::default(), e).unwrap())
        });
    }
    group.finish();
}

fn bench_candidate_sweep(c: &mut Criterion) {
    let base = reference_model();
    let target = RegimeTarget {
        target_pairs: vec![vec![0, 1], vec![0, 2], vec![0, 3]],
        target_chi_mhz: -5.0,
        equal_tol: 0.02,
        unwanted_cap_mhz: 0.5,
        bounds: vec![],
    };
    // perturbed candidates around the reference couplings
    let candidates: Vec<CircuitSpec> = (0..24)
        .map(|k| {
            let mut s = base.clone();
            let f = 0.95 + 0.004 * k as f64;
            for e in s.edges.iter_mut().take(3) {
                e.g *= f;
            }
            s
        })
        .collect();
    let mut group = c.benchmark_group("candidate_sweep_24");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| {
                parity_core::exec::map_collect(e, candidates.clone(), |s| {
                    regime_objective(&s, &target, Execution::Sequential).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn bench_propagation_columns(c: &mut Criterion) {
    let spec = reference_model();
    let drives = parity_drives(&spec, 0.00159, Parity::Odd).unwrap();
    let mut group = c.benchmark_group("propagate_20ns_rotating");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| propagate_unitary(&spec, &drives, 20.0, 40.0, Frame::Rotating, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_shift_table, bench_candidate_sweep, bench_propagation_columns);
criterion_main!(benches);
