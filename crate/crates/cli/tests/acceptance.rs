//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`).

mod common;

use common::{random_program, states_equal_up_to_phase};
use num_complex::Complex64;
use qurt::{codegen, compiler, ir, programs, sim};
use qurt::{CouplingGraph, GateSpec, Instruction, Process};
use std::collections::HashSet;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::Instant;

fn criterion(n: usize, desc: &str, f: impl FnOnce() + UnwindSafe) {
    match catch_unwind(f) {
        Ok(()) => println!("criterion {n:2} PASS  {desc}"),
        Err(e) => {
            println!("criterion {n:2} FAIL  {desc}");
            resume_unwind(e);
        }
    }
}

#[test]
fn c01_teleport_golden_ir() {
    criterion(1, "teleport lowers to the golden instruction sequence", || {
        let start = Instant::now();
        let (p, m) = programs::teleport(0);
        let (code, _) = codegen::build_code(&p, &[&m]).unwrap();
        let expected = "\
alloc q0
gate h q0
alloc q1
alloc q2
gate h q1
gate x ctrl q1, q2
gate x ctrl q0, q1
gate h q0
measure q0 -> i0
measure q1 -> i1
br i0 @L1 @L0
label @L1
gate z q2
label @L0
br i1 @L3 @L2
label @L3
gate x q2
label @L2
measure q2 -> i2
out i2
";
        assert_eq!(ir::serialize(&code), expected);
        assert!(start.elapsed().as_secs_f64() < 1.0);
    });
}

#[test]
fn c02_teleport_identity_channel() {
    criterion(2, "teleportation preserves an arbitrary state to 1e-9", || {
        let (theta, phi): (f64, f64) = (1.2345, 0.6789);
        let c0 = Complex64::new((theta / 2.0).cos(), 0.0);
        let c1 = Complex64::from_polar((theta / 2.0).sin(), phi);
        let mut branches = HashSet::new();
        for seed in 0..100u64 {
            let (mut p, m0, m1) = programs::teleport_bloch(seed, theta, phi);
            let outcome = p.execute(&[&m0, &m1]).unwrap();
            let (v0, v1) = (p.value(&m0).unwrap(), p.value(&m1).unwrap());
            branches.insert((v0, v1));
            let amps = outcome.state.state_vector();
            assert_eq!(amps.len(), 8);
            // Live order is allocation order (a, q0, q1), MSB first.
            let base = (v0 as usize) * 4 + (v1 as usize) * 2;
            let fid = (c0.conj() * amps[base] + c1.conj() * amps[base + 1]).norm_sqr();
            assert!(fid >= 1.0 - 1e-9, "seed {seed}: fidelity {fid}");
        }
        assert_eq!(branches.len(), 4, "not all correction branches were hit");
    });
}

#[test]
fn c03_classical_branch_elision() {
    criterion(3, "classical flags vanish from the bell IR", || {
        let count = |aux0: i64, aux1: i64| {
            let (p, m) = programs::bell_flags(0, aux0, aux1);
            let (code, _) = codegen::build_code(&p, &[&m]).unwrap();
            let bare_x = code
                .instructions
                .iter()
                .filter(|i| {
                    matches!(i, Instruction::Gate { spec: GateSpec::X, controls, .. }
                        if controls.is_empty())
                })
                .count();
            let branches = code
                .instructions
                .iter()
                .filter(|i| matches!(i, Instruction::Branch { .. }))
                .count();
            (bare_x, branches)
        };
        assert_eq!(count(0, 0), (0, 0));
        assert_eq!(count(1, 0), (1, 0));
    });
}

fn single_qubit_code(spec: GateSpec) -> qurt::QuantumCode {
    let mut p = Process::new(0);
    let q = p.alloc().unwrap();
    p.gate(spec, &q).unwrap();
    let m = p.measure(&[&q]).unwrap();
    codegen::build_code(&p, &[&m]).unwrap().0
}

fn frequency_of(code: &qurt::QuantumCode, value: i64, shots: u64) -> f64 {
    let hits = (0..shots)
        .filter(|&s| sim::run(code, s).unwrap().outs[0] == value)
        .count();
    hits as f64 / shots as f64
}

#[test]
fn c04_measurement_statistics() {
    criterion(4, "H and RY(π/3) measurement frequencies", || {
        let f_h = frequency_of(&single_qubit_code(GateSpec::H), 0, 10_000);
        assert!((0.47..=0.53).contains(&f_h), "H freq(0) = {f_h}");
        let ry = single_qubit_code(GateSpec::Ry(std::f64::consts::PI / 3.0));
        let f_ry = frequency_of(&ry, 0, 10_000);
        assert!((0.72..=0.78).contains(&f_ry), "RY(π/3) freq(0) = {f_ry}");
    });
}

#[test]
fn c05_bell_correlation() {
    criterion(5, "bell outcomes are perfectly correlated over 10k shots", || {
        let (p, m) = programs::bell(0);
        let (code, _) = codegen::build_code(&p, &[&m]).unwrap();
        for seed in 0..10_000u64 {
            let v = sim::run(&code, seed).unwrap().outs[0];
            assert!(v == 0 || v == 3, "seed {seed} gave {v}");
        }
    });
}

#[test]
fn c06_optimizer_soundness() {
    criterion(6, "every pass preserves outputs and state on 100 programs", || {
        let start = Instant::now();
        for seed in 0..100u64 {
            let code = random_program(seed, 2);
            let baseline = sim::run(&code, seed).unwrap();
            let variants: Vec<(&str, qurt::QuantumCode)> = vec![
                ("cancel", compiler::cancel_inverse_pairs(&code)),
                ("merge", compiler::merge_rotations(&code)),
                ("decompose", compiler::decompose_multictrl(&code)),
                ("pipeline", compiler::emit_assembly(&code).unwrap()),
            ];
            for (name, v) in variants {
                let got = sim::run(&v, seed).unwrap();
                assert_eq!(got.outs, baseline.outs, "seed {seed}, pass {name}");
                assert!(
                    states_equal_up_to_phase(
                        got.state.state_vector(),
                        baseline.state.state_vector(),
                        1e-9
                    ),
                    "seed {seed}, pass {name}: state diverged"
                );
            }
        }
        assert!(start.elapsed().as_secs_f64() < 30.0);
    });
}

/// Decompose an n-controlled X on (controls…, target), keep ancillas
/// alive by dropping frees, and probe every basis column.
fn check_cnx(n: usize) {
    let nq = n + 1;
    for basis in 0..1usize << nq {
        let mut ins: Vec<Instruction> = (0..nq).map(|q| Instruction::Alloc { qubit: q }).collect();
        for q in 0..nq {
            if basis >> (nq - 1 - q) & 1 == 1 {
                ins.push(Instruction::Gate { spec: GateSpec::X, controls: vec![], target: q });
            }
        }
        ins.push(Instruction::Gate {
            spec: GateSpec::X,
            controls: (0..n).collect(),
            target: n,
        });
        let code = qurt::QuantumCode::new(ins, qurt::IrLevel::Code);
        let decomposed = compiler::decompose_multictrl(&code);
        for i in &decomposed.instructions {
            if let Instruction::Gate { controls, .. } = i {
                assert!(controls.len() <= 1);
            }
        }
        let kept: Vec<Instruction> = decomposed
            .instructions
            .iter()
            .filter(|i| !matches!(i, Instruction::Free { .. }))
            .cloned()
            .collect();
        let probe = qurt::QuantumCode::new(kept, qurt::IrLevel::Code);
        let out = sim::run(&probe, 0).unwrap();
        let amps = out.state.state_vector();
        let ancillas = out.state.live_qubits().len() - nq;
        let expected = if basis >> 1 == (1 << n) - 1 { basis ^ 1 } else { basis };
        // Main qubits are the most significant bits, ancillas trail as
        // zeros: the permutation must be exact and ancillas restored.
        let idx = expected << ancillas;
        assert!(
            (amps[idx] - Complex64::new(1.0, 0.0)).norm() <= 1e-9,
            "C{n}X basis {basis}: amp[{idx}] = {}",
            amps[idx]
        );
    }
}

#[test]
fn c07_decomposition_oracle() {
    criterion(7, "C²X and C³X decompositions are the exact permutation", || {
        check_cnx(2);
        check_cnx(3);
    });
}

#[test]
fn c08_mapping_validity() {
    criterion(8, "line-routed assembly stays on edges and agrees", || {
        let line = CouplingGraph::line(5);
        for seed in 0..50u64 {
            let code = random_program(seed, 1);
            let (mapped, _) = compiler::emit_assembly_mapped(&code, Some(&line)).unwrap();
            for i in &mapped.instructions {
                if let Instruction::Gate { controls, target, .. } = i {
                    if let [c] = controls[..] {
                        assert!(line.has_edge(c, *target), "seed {seed}: cx q{c},q{target}");
                    }
                }
            }
            let plain = compiler::emit_assembly(&code).unwrap();
            for s in [seed, seed + 50, seed + 100] {
                let a = sim::run(&plain, s).unwrap();
                let b = sim::run(&mapped, s).unwrap();
                assert_eq!(a.outs, b.outs, "seed {seed}, run seed {s}");
            }
        }
    });
}

#[test]
fn c09_quantum_side_loop() {
    criterion(9, "coinloop branches backwards and runs 2 iterations on average", || {
        let (p, m) = programs::coinloop(0);
        let (code, regs) = codegen::build_code(&p, &[&m]).unwrap();
        let mut label_pos = std::collections::HashMap::new();
        for (i, ins) in code.instructions.iter().enumerate() {
            if let Instruction::Label { name } = ins {
                label_pos.insert(name.clone(), i);
            }
        }
        let has_back_jump = code.instructions.iter().enumerate().any(|(i, ins)| {
            matches!(ins, Instruction::Jump { target } if label_pos[target] < i)
        });
        assert!(has_back_jump, "no backwards jump closing the loop");
        assert!(code.instructions.iter().any(|i| matches!(i, Instruction::Branch { .. })));

        let reg = regs.register_of(&m).unwrap();
        let total: usize = (0..10_000u64)
            .map(|s| {
                sim::run(&code, s)
                    .unwrap()
                    .reg_writes
                    .iter()
                    .filter(|(r, _)| *r == reg)
                    .count()
            })
            .sum();
        let mean = total as f64 / 10_000.0;
        assert!((1.9..=2.1).contains(&mean), "mean iterations {mean}");
    });
}

#[test]
fn c10_grover_desk_scale() {
    criterion(10, "grover3 finds |111⟩ with the predicted frequency", || {
        let (p, m) = programs::grover3(0);
        let (code, _) = codegen::build_code(&p, &[&m]).unwrap();
        let f = frequency_of(&code, 7, 10_000);
        assert!((0.93..=0.96).contains(&f), "freq(7) = {f}");
    });
}

#[test]
fn c11_determinism_and_round_trip() {
    criterion(11, "byte-identical reports and serialize∘parse identity", || {
        let report = |args: &[&str]| {
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_qurt"))
                .args(args)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            out.stdout
        };
        for args in [
            vec!["run", "bell", "--shots", "200", "--seed", "7"],
            vec!["run", "teleport", "--dump-ir", "--shots", "50", "--seed", "3"],
            vec!["run", "grover3", "--shots", "100", "--level", "asm"],
        ] {
            assert_eq!(report(&args), report(&args), "report not reproducible: {args:?}");
        }
        for seed in 0..1_000u64 {
            let code = random_program(seed, 2);
            let text = ir::serialize(&code);
            let reparsed = ir::parse(&text).unwrap();
            assert_eq!(reparsed.instructions, code.instructions, "seed {seed}");
            assert_eq!(ir::serialize(&reparsed), text, "seed {seed}");
        }
    });
}
