//! `dparity`: build coupled-transmon models, reduce them, compute dispersive
//! shift tables, search parameter regimes, simulate the two-drive parity gate
//! and score it against ideal stabilizer unitaries and CNOT-chain baselines.
//!
//! Every command writes deterministic artifacts (JSON report plus CSVs) into
//! the output directory; the resolved inputs, seed and code version are
//! embedded in each report. Exit codes: 0 success, 2 config error, 3
//! physics-regime refusal, 4 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use parity_core::config::{self, CircuitFile};
use parity_core::dynamics::{
    decohered_fidelity, dressed_ancilla_freq, parity_drives, phase_closure_time, population_trace,
    propagate_unitary, score_gate, DriveSpec, Frame, GateResult, IdealGate, Propagation,
};
use parity_core::error::Error;
use parity_core::exec::Execution;
use parity_core::fock::{assemble_hamiltonian, CircuitSpec};
use parity_core::linalg::hermiticity_residual;
use parity_core::regimes::{lattice_detuning_check, regime_search, RegimeTarget, SearchOptions};
use parity_core::shifts::{shift_table, ShiftMethod, ShiftOptions};
use parity_core::stabilizers::{cnot_chain_fidelity, Parity};
use parity_core::sw::{eliminate_central_coupler_with, eliminate_edge_couplers_with, sw_validity_report};

#[derive(Parser)]
#[command(name = "dparity", version, about = "dispersive parity measurement toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for reports and CSVs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed recorded in every artifact and used by seeded optimizers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker-thread cap for the data-parallel loops (1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Lab,
    Rotating,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Lab => Frame::Lab,
            FrameArg::Rotating => Frame::Rotating,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Pt2,
    Pt3,
    Pt4,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdealArg {
    Odd,
    Even,
    Identity,
}

impl From<IdealArg> for IdealGate {
    fn from(i: IdealArg) -> IdealGate {
        match i {
            IdealArg::Odd => IdealGate::Parity(Parity::Odd),
            IdealArg::Even => IdealGate::Parity(Parity::Even),
            IdealArg::Identity => IdealGate::Identity,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a circuit config and report its dimensions and Hermiticity.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Override every mode's Fock truncation.
        #[arg(long)]
        levels: Option<u8>,
    },
    /// Eliminate the unit-cell couplers and emit the dressed specs plus a
    /// validity report.
    Reduce {
        #[arg(long)]
        config: PathBuf,
        /// Global excitation cutoff for the full-cell spectral check.
        #[arg(long, default_value_t = 4)]
        cutoff: u32,
        /// Dispersive bound |g/Delta| enforced by the eliminations.
        #[arg(long, default_value_t = parity_core::sw::DISPERSIVE_BOUND)]
        bound: f64,
    },
    /// Compute the bare/full dispersive shift table of a circuit.
    Shifts {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Diagonalize under a global excitation cutoff instead of the full basis.
        #[arg(long)]
        cutoff: Option<u32>,
        /// Denominator floor for perturbation theory, MHz.
        #[arg(long, default_value_t = 10.0)]
        pt_floor_mhz: f64,
        #[arg(long)]
        levels: Option<u8>,
    },
    /// Search for a regime with equal ancilla-data shifts and suppressed rest.
    Search {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 512)]
        candidates: usize,
        #[arg(long, default_value_t = 200)]
        refine_iters: usize,
    },
    /// Propagate the driven model and score the projected gate.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Drive amplitude in GHz (a resonant flat drive inverts in 1/amp ns).
        #[arg(long, default_value_t = 0.00159)]
        amp: f64,
        /// Ideal gate to score against; parity ideals also select the
        /// auto-computed drive frequencies.
        #[arg(long, value_enum, default_value_t = IdealArg::Odd)]
        ideal: IdealArg,
        #[arg(long, default_value_t = 600.0)]
        t_gate_ns: f64,
        /// Step size in ps; defaults to 1 ps (lab) or 40 ps (rotating).
        #[arg(long)]
        dt_ps: Option<f64>,
        #[arg(long, value_enum, default_value_t = FrameArg::Rotating)]
        frame: FrameArg,
        /// Per-mode T1 in microseconds; omit for a coherent-only run.
        #[arg(long)]
        t1_us: Option<f64>,
        /// Also write per-step population traces (rotating frame).
        #[arg(long)]
        traces: bool,
        #[arg(long, default_value_t = 25)]
        trace_stride: usize,
        #[arg(long)]
        levels: Option<u8>,
    },
    /// Check pairwise detunings of a lattice frequency assignment.
    LatticeCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 25.0)]
        min_detuning_mhz: f64,
    },
    /// CNOT-chain fidelity baselines, optionally against a gate report.
    Compare {
        #[arg(long, default_value_t = 0.985)]
        f_cnot: f64,
        /// Chain lengths to tabulate (repeatable).
        #[arg(long = "n-cnots", default_values_t = vec![2u32, 4u32])]
        n_cnots: Vec<u32>,
        /// Gate report JSON (from evolve/repro-table1) for the single-shot row.
        #[arg(long)]
        gate_report: Option<PathBuf>,
    },
    /// Full reproduction on the bundled reference model: shift table against
    /// the golden file, two-drive gate, decoherence and CNOT baselines.
    ReproTable1 {
        #[arg(long, default_value = "configs/table1.toml")]
        config: PathBuf,
        #[arg(long, default_value = "configs/table1_shifts_golden.csv")]
        golden: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameArg::Rotating)]
        frame: FrameArg,
        #[arg(long)]
        dt_ps: Option<f64>,
        #[arg(long, default_value_t = 600.0)]
        t_gate_ns: f64,
        #[arg(long, default_value_t = 0.00159)]
        amp: f64,
        #[arg(long, default_value_t = 100.0)]
        t1_us: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let exec = setup_threads(cli.common.threads);
    if let Err(e) = run(cli, exec) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn setup_threads(threads: Option<usize>) -> Execution {
    match threads {
        Some(1) => Execution::Sequential,
        Some(_n) => {
            #[cfg(feature = "parallel")]
            {
                let _ = parity_core::rayon::ThreadPoolBuilder::new()
                    .num_threads(_n)
                    .build_global();
            }
            Execution::Parallel
        }
        None => Execution::Parallel,
    }
}

fn meta(seed: u64, resolved: serde_json::Value) -> serde_json::Value {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "timestamp_unix": timestamp,
        "resolved": resolved,
    })
}

fn write_report(out: &Path, name: &str, report: &serde_json::Value) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(report)?.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(out: &Path, name: &str, text: &str) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn override_levels(file: &mut CircuitFile, levels: Option<u8>) {
    if let Some(l) = levels {
        for m in file.spec.modes.iter_mut() {
            m.levels = l;
        }
    }
}

fn gate_report_json(
    spec: &CircuitSpec,
    drives: &[DriveSpec],
    prop: &Propagation,
    score: &GateResult,
) -> serde_json::Value {
    json!({
        "t_gate_ns": score.t_gate_ns,
        "dt_ps": prop.dt_ps,
        "frame": format!("{:?}", prop.frame).to_lowercase(),
        "frame_freq_ghz": prop.frame_freq_ghz,
        "drives": drives,
        "dressed_ancilla_freq_ghz": dressed_ancilla_freq(spec).ok(),
        "fidelity_raw": score.fidelity_raw,
        "fidelity_corrected": score.fidelity_corrected,
        "fidelity_perfect_phase": score.fidelity_perfect_phase,
        "phases_rad": score.phases,
        "leakage_out_avg": score.leakage_out_avg,
        "leakage_per_column": score.leakage_per_column,
        "in_subspace_error_avg": score.in_subspace_error_avg,
        "unitarity_residual": prop.unitarity_residual,
    })
}

fn magnitudes_csv(score: &GateResult, labels: &[String]) -> String {
    let mut out = String::from("label");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    let n = score.projected.nrows();
    for r in 0..n {
        out.push_str(&labels[r]);
        for c in 0..n {
            out.push_str(&format!(",{:.6}", score.projected[(r, c)].norm()));
        }
        out.push('\n');
    }
    out
}

fn run(cli: Cli, exec: Execution) -> Result<(), Error> {
    let out = &cli.common.out;
    let seed = cli.common.seed;
    match cli.command {
        Command::Build { config, levels } => {
            let mut file = config::load_circuit(&config)?;
            override_levels(&mut file, levels);
            let warnings = file.spec.validate()?;
            let dim = file.spec.dimension()?;
            let hermiticity = if dim <= parity_core::fock::DENSE_LIMIT {
                Some(hermiticity_residual(&assemble_hamiltonian(&file.spec)?))
            } else {
                None
            };
            let report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "dimension": dim,
                "modes": file.spec.modes.len(),
                "edges": file.spec.edges.len(),
                "hermiticity_residual": hermiticity,
                "warnings": warnings,
                "provenance": file.provenance,
            });
            write_report(out, "build_report.json", &report)
        }
        Command::Reduce { config, cutoff, bound } => {
            let file = config::load_circuit(&config)?;
            let first = eliminate_edge_couplers_with(&file.spec, &file.provenance, bound)?;
            let reduced = eliminate_central_coupler_with(&first, bound, false)?;
            std::fs::create_dir_all(out)?;
            config::save_circuit(
                &out.join("first_dressed.toml"),
                &CircuitFile { spec: first.spec.clone(), provenance: first.provenance.clone() },
            )?;
            config::save_circuit(
                &out.join("effective.toml"),
                &CircuitFile { spec: reduced.spec.clone(), provenance: reduced.provenance.clone() },
            )?;
            println!("wrote {}", out.join("effective.toml").display());
            let validity = sw_validity_report(&file.spec, cutoff, exec)?;
            let report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "residual_couplings_first_stage": first.residual_couplings,
                "validity": validity,
            });
            write_report(out, "reduce_report.json", &report)
        }
        Command::Shifts { config, method, cutoff, pt_floor_mhz, levels } => {
            let mut file = config::load_circuit(&config)?;
            override_levels(&mut file, levels);
            let method = match method {
                MethodArg::Exact => ShiftMethod::Exact,
                MethodArg::Pt2 => ShiftMethod::Pt(2),
                MethodArg::Pt3 => ShiftMethod::Pt(3),
                MethodArg::Pt4 => ShiftMethod::Pt(4),
            };
            let opts = ShiftOptions { method, cutoff, pt_floor: pt_floor_mhz * 1e-3 };
            let table = shift_table(&file.spec, opts, exec)?;
            write_text(out, "shifts.csv", &table.to_csv())?;
            let report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "method": table.method.to_string(),
                "rows": table.report_rows(),
            });
            write_report(out, "shifts.json", &report)
        }
        Command::Search { config, candidates, refine_iters } => {
            let file = config::load_regime_target(&config)?;
            let (base, target) = RegimeTarget::from_config(&file)?;
            let opts = SearchOptions {
                n_candidates: candidates,
                refine_iterations: refine_iters,
                refine_from_best: 4,
                seed,
            };
            let result = regime_search(&base, &target, &opts, exec)?;
            let mut csv = String::from("objective");
            for (k, _, _) in &target.bounds {
                csv.push_str(&format!(",{k:?}"));
            }
            csv.push('\n');
            for c in &result.candidates {
                match c.objective {
                    Some(j) => csv.push_str(&format!("{j:.9}")),
                    None => csv.push_str("nan"),
                }
                for v in &c.values {
                    csv.push_str(&format!(",{v:.9}"));
                }
                csv.push('\n');
            }
            write_text(out, "candidates.csv", &csv)?;
            write_text(out, "best_shifts.csv", &result.best_table.to_csv())?;
            config::save_circuit(
                &out.join("best_spec.toml"),
                &CircuitFile::new(result.best_spec.clone()),
            )?;
            let report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "best_objective": result.best_objective,
                "best_spec": result.best_spec,
                "shift_table": result.best_table.report_rows(),
                "verdict": result.verdict,
                "candidates_evaluated": result.candidates.len(),
            });
            write_report(out, "search_report.json", &report)
        }
        Command::Evolve {
            config,
            amp,
            ideal,
            t_gate_ns,
            dt_ps,
            frame,
            t1_us,
            traces,
            trace_stride,
            levels,
        } => {
            let mut file = config::load_circuit(&config)?;
            override_levels(&mut file, levels);
            let frame: Frame = frame.into();
            let dt = dt_ps.unwrap_or(match frame {
                Frame::Lab => 1.0,
                Frame::Rotating => 40.0,
            });
            let ideal_gate: IdealGate = ideal.into();
            let drives = match ideal_gate {
                IdealGate::Parity(p) if amp > 0.0 => parity_drives(&file.spec, amp, p)?,
                _ => Vec::new(),
            };
            let prop = propagate_unitary(&file.spec, &drives, t_gate_ns, dt, frame, exec)?;
            let score = score_gate(&prop, ideal_gate, seed)?;
            let labels: Vec<String> = prop.labels.iter().map(|l| l.to_string()).collect();
            write_text(out, "unitary_magnitudes.csv", &magnitudes_csv(&score, &labels))?;
            let mut report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "gate": gate_report_json(&file.spec, &drives, &prop, &score),
            });
            if let Some(t1) = t1_us {
                let t1_vec = vec![t1; file.spec.modes.len()];
                let dec = decohered_fidelity(
                    &file.spec,
                    &drives,
                    t_gate_ns,
                    dt.max(100.0),
                    frame,
                    &t1_vec,
                    ideal_gate,
                    seed,
                    exec,
                )?;
                report["decoherence"] = json!({
                    "t1_us": t1,
                    "fidelity_basis_avg": dec.fidelity_basis_avg,
                    "fidelity_channel": dec.fidelity_channel,
                    "coherent_fidelity": dec.coherent_fidelity,
                    "deficit": dec.deficit,
                    "max_trace_error": dec.max_trace_error,
                    "min_population": dec.min_population,
                });
            }
            if traces {
                let tr = population_trace(&file.spec, &drives, t_gate_ns, dt, ideal_gate, trace_stride)?;
                let mut csv = String::from("t_ns");
                for l in &tr.labels {
                    csv.push_str(&format!(",{l}_self,{l}_target,{l}_leak"));
                }
                csv.push('\n');
                for (t, row) in tr.t_ns.iter().zip(&tr.rows) {
                    csv.push_str(&format!("{t:.3}"));
                    for (s, tg, lk) in row {
                        csv.push_str(&format!(",{s:.6},{tg:.6},{lk:.6}"));
                    }
                    csv.push('\n');
                }
                write_text(out, "population_traces.csv", &csv)?;
            }
            write_report(out, "gate_report.json", &report)
        }
        Command::LatticeCheck { config, min_detuning_mhz } => {
            let lattice = config::load_lattice(&config)?;
            let check = lattice_detuning_check(&lattice, min_detuning_mhz)?;
            let report = json!({
                "meta": meta(seed, serde_json::to_value(&lattice)?),
                "report": check,
            });
            write_report(out, "lattice_report.json", &report)
        }
        Command::Compare { f_cnot, n_cnots, gate_report } => {
            let mut rows = Vec::new();
            for n in &n_cnots {
                rows.push(json!({
                    "method": format!("cnot-chain-{n}"),
                    "fidelity": cnot_chain_fidelity(*n, f_cnot)?,
                }));
            }
            if let Some(path) = &gate_report {
                let text = std::fs::read_to_string(path)?;
                let parsed: serde_json::Value = serde_json::from_str(&text)?;
                if let Some(f) = parsed
                    .pointer("/gate/fidelity_perfect_phase")
                    .and_then(|v| v.as_f64())
                {
                    rows.insert(0, json!({"method": "single-shot", "fidelity": f}));
                }
            }
            let mut csv = String::from("method,fidelity\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{:.6}\n",
                    r["method"].as_str().unwrap(),
                    r["fidelity"].as_f64().unwrap()
                ));
            }
            write_text(out, "comparison.csv", &csv)?;
            let report = json!({
                "meta": meta(seed, json!({"f_cnot": f_cnot, "n_cnots": n_cnots})),
                "rows": rows,
            });
            write_report(out, "comparison.json", &report)
        }
        Command::ReproTable1 { config, golden, frame, dt_ps, t_gate_ns, amp, t1_us } => {
            let file = config::load_circuit(&config)?;
            let frame: Frame = frame.into();
            let dt = dt_ps.unwrap_or(match frame {
                Frame::Lab => 1.0,
                Frame::Rotating => 40.0,
            });

            // shift table against the golden reference
            let table = shift_table(&file.spec, ShiftOptions::default(), exec)?;
            write_text(out, "shifts.csv", &table.to_csv())?;
            let golden_rows = parse_golden(&golden)?;
            let mut golden_cmp = Vec::new();
            for (subset_name, chi_ref) in &golden_rows {
                let found = table
                    .report_rows()
                    .into_iter()
                    .find(|r| r.subset == *subset_name)
                    .map(|r| r.chi_full_mhz);
                golden_cmp.push(json!({
                    "subset": subset_name,
                    "reference_mhz": chi_ref,
                    "computed_mhz": found,
                    "deviation_mhz": found.map(|v| v - chi_ref),
                    "within_0p1_mhz": found.map(|v| (v - chi_ref).abs() <= 0.1),
                }));
            }

            // two-drive gate
            let drives = parity_drives(&file.spec, amp, Parity::Odd)?;
            let ideal_gate = IdealGate::Parity(Parity::Odd);
            let prop = propagate_unitary(&file.spec, &drives, t_gate_ns, dt, frame, exec)?;
            let score = score_gate(&prop, ideal_gate, seed)?;
            let labels: Vec<String> = prop.labels.iter().map(|l| l.to_string()).collect();
            write_text(out, "unitary_magnitudes.csv", &magnitudes_csv(&score, &labels))?;

            // decoherence and baselines
            let t1_vec = vec![t1_us; file.spec.modes.len()];
            let dec = decohered_fidelity(
                &file.spec,
                &drives,
                t_gate_ns,
                dt.max(200.0),
                frame,
                &t1_vec,
                ideal_gate,
                seed,
                exec,
            )?;
            let chain2 = cnot_chain_fidelity(2, 0.985)?;
            let chain4 = cnot_chain_fidelity(4, 0.985)?;
            let closure = phase_closure_time(7.5, 600.0)?;

            let report = json!({
                "meta": meta(seed, serde_json::to_value(&file)?),
                "shift_table": table.report_rows(),
                "golden_comparison": golden_cmp,
                "gate": gate_report_json(&file.spec, &drives, &prop, &score),
                "decoherence": {
                    "t1_us": t1_us,
                    "fidelity_basis_avg": dec.fidelity_basis_avg,
                    "fidelity_channel": dec.fidelity_channel,
                    "coherent_fidelity": dec.coherent_fidelity,
                    "deficit": dec.deficit,
                },
                "baselines": {
                    "cnot_chain_2": chain2,
                    "cnot_chain_4": chain4,
                    "phase_closure_ns_for_7p5_mhz": closure,
                },
            });
            write_report(out, "repro_report.json", &report)?;
            println!(
                "gate: F_perfect = {:.4}, F_corrected = {:.4}, leakage = {:.5}; decohered channel = {:.4}; chains: {:.4} / {:.4}",
                score.fidelity_perfect_phase,
                score.fidelity_corrected,
                score.leakage_out_avg,
                dec.fidelity_channel,
                chain2,
                chain4
            );
            Ok(())
        }
    }
}

fn parse_golden(path: &Path) -> Result<Vec<(String, f64)>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let subset = parts.next().unwrap_or("").trim().to_string();
        let chi: f64 = parts.next().unwrap_or("").trim().parse().map_err(|e| Error::InvalidSpec {
            path: format!("{}:{}", path.display(), i + 1),
            message: format!("bad number: {e}"),
        })?;
        rows.push((subset, chi));
    }
    Ok(rows)
}
