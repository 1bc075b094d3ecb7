//! Shared helpers for the integration suites: a seeded random program
//! generator and state-vector comparison up to global phase.

use num_complex::Complex64;
use qurt::{GateSpec, Instruction, IrLevel, QuantumCode};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

fn random_angle(rng: &mut ChaCha8Rng) -> f64 {
    // Grid of angles in (-2π, 2π); includes values that merge to identity.
    (pick(rng, 1257) as f64 - 628.0) * 0.01
}

fn random_gate(rng: &mut ChaCha8Rng, nq: usize, max_controls: usize) -> Instruction {
    let spec = match pick(rng, 12) {
        0 => GateSpec::X,
        1 => GateSpec::Y,
        2 => GateSpec::Z,
        3 => GateSpec::H,
        4 => GateSpec::S,
        5 => GateSpec::Sdg,
        6 => GateSpec::T,
        7 => GateSpec::Tdg,
        8 => GateSpec::Phase(random_angle(rng)),
        9 => GateSpec::Rx(random_angle(rng)),
        10 => GateSpec::Ry(random_angle(rng)),
        _ => GateSpec::Rz(random_angle(rng)),
    };
    let target = pick(rng, nq);
    let want = pick(rng, max_controls + 1).min(nq - 1);
    let mut controls = Vec::new();
    let mut q = 0;
    while controls.len() < want {
        if q != target {
            controls.push(q);
        }
        q += 1;
    }
    Instruction::Gate { spec, controls, target }
}

/// Random program: 1–5 qubits, at most 20 gates, at most one
/// measurement-driven conditional, final measurement of every qubit.
pub fn random_program(seed: u64, max_controls: usize) -> QuantumCode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let nq = 1 + pick(&mut rng, 5);
    let budget = pick(&mut rng, 21);
    let mut ins: Vec<Instruction> = (0..nq).map(|q| Instruction::Alloc { qubit: q }).collect();
    let conditional = budget >= 4 && rng.next_u64() % 2 == 0;
    let (pre, inner) = if conditional {
        (budget / 2, budget - budget / 2)
    } else {
        (budget, 0)
    };
    for _ in 0..pre {
        ins.push(random_gate(&mut rng, nq, max_controls));
    }
    if conditional {
        let cond_reg = 0;
        ins.push(Instruction::Measure { qubits: vec![pick(&mut rng, nq)], reg: cond_reg });
        ins.push(Instruction::Branch {
            reg: cond_reg,
            on_true: "T".into(),
            on_false: "F".into(),
        });
        ins.push(Instruction::Label { name: "T".into() });
        for _ in 0..inner / 2 {
            ins.push(random_gate(&mut rng, nq, max_controls));
        }
        ins.push(Instruction::Jump { target: "E".into() });
        ins.push(Instruction::Label { name: "F".into() });
        for _ in 0..inner - inner / 2 {
            ins.push(random_gate(&mut rng, nq, max_controls));
        }
        ins.push(Instruction::Label { name: "E".into() });
    }
    let out_reg = if conditional { 1 } else { 0 };
    ins.push(Instruction::Measure { qubits: (0..nq).collect(), reg: out_reg });
    ins.push(Instruction::Out { reg: out_reg });
    if conditional {
        ins.push(Instruction::Out { reg: 0 });
    }
    let code = QuantumCode::new(ins, IrLevel::Code);
    code.validate().expect("generated program must be valid");
    code
}

/// |⟨a|b⟩| = 1 within tol, i.e. equality up to a global phase.
pub fn states_equal_up_to_phase(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut k = 0;
    for (i, amp) in a.iter().enumerate() {
        if amp.norm_sqr() > a[k].norm_sqr() {
            k = i;
        }
    }
    if b[k].norm() < 1e-12 {
        return false;
    }
    let phase = a[k] / b[k];
    let phase = phase / phase.norm();
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - phase * y).norm() <= tol)
}
