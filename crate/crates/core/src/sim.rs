//! Deterministic state-vector simulator for both IR levels.
//!
//! Multi-controlled gates execute natively in one step at code level.
//! Classical registers, labels and branches are interpreted directly, so
//! quantum-side loops run entirely inside the simulator.
//!
//! # RNG contract
//!
//! The sampling stream is pinned so golden outputs are stable across
//! platforms: a ChaCha8 generator seeded with `seed_from_u64(seed)`, and
//! each draw in [0, 1) is `(next_u64() >> 11) * 2^-53`. One draw is
//! consumed per sampled qubit, in measurement-list order.

use crate::error::{Error, Result};
use crate::ir::{Instruction, QuantumCode};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

pub const DEFAULT_MAX_QUBITS: usize = 24;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub max_steps: u64,
    pub max_qubits: usize,
    /// Assert Σ|amp|² = 1 within 1e-10 after every instruction.
    pub check_norm: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { max_steps: DEFAULT_MAX_STEPS, max_qubits: DEFAULT_MAX_QUBITS, check_norm: true }
    }
}

/// Dense state over the currently live qubits.
///
/// Qubit order is allocation order: the earliest live qubit is the most
/// significant bit of the amplitude index.
#[derive(Debug, Clone)]
pub struct SimState {
    amps: Vec<Complex64>,
    live: Vec<usize>,
    rng: ChaCha8Rng,
}

impl SimState {
    fn new(seed: u64) -> SimState {
        SimState {
            amps: vec![Complex64::new(1.0, 0.0)],
            live: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Amplitudes in the documented qubit order.
    pub fn state_vector(&self) -> &[Complex64] {
        &self.amps
    }

    /// Live qubit ids, most significant first.
    pub fn live_qubits(&self) -> &[usize] {
        &self.live
    }

    fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn bit_shift(&self, qubit: usize) -> Result<u32> {
        let pos = self
            .live
            .iter()
            .position(|&q| q == qubit)
            .ok_or(Error::QubitNotAllocated(qubit))?;
        Ok((self.live.len() - 1 - pos) as u32)
    }

    fn alloc(&mut self, qubit: usize, max_qubits: usize) -> Result<()> {
        if self.live.contains(&qubit) {
            return Err(Error::QubitAlreadyAllocated(qubit));
        }
        if self.live.len() + 1 > max_qubits {
            return Err(Error::QubitLimitExceeded(max_qubits));
        }
        self.live.push(qubit);
        // Tensor with |0⟩ at the least significant position.
        let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len() * 2];
        for (i, a) in self.amps.iter().enumerate() {
            next[i << 1] = *a;
        }
        self.amps = next;
        Ok(())
    }

    fn free(&mut self, qubit: usize) -> Result<()> {
        let shift = self.bit_shift(qubit)?;
        let mask = 1usize << shift;
        let p1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        // Deterministic qubits (post-measurement) consume no rng draw.
        let bit = if p1 < 1e-15 {
            0
        } else if p1 > 1.0 - 1e-15 {
            1
        } else {
            let u = self.next_f64();
            if u < 1.0 - p1 {
                self.collapse(mask, 0, 1.0 - p1);
                0
            } else {
                self.collapse(mask, 1, p1);
                1
            }
        };
        let keep = if bit == 1 { mask } else { 0 };
        let mut next = Vec::with_capacity(self.amps.len() / 2);
        for (i, a) in self.amps.iter().enumerate() {
            if i & mask == keep {
                next.push(*a);
            }
        }
        let norm: f64 = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for a in &mut next {
                *a /= norm;
            }
        }
        self.amps = next;
        let pos = self.live.iter().position(|&q| q == qubit).unwrap();
        self.live.remove(pos);
        Ok(())
    }

    fn apply_gate(&mut self, m: [[Complex64; 2]; 2], controls: &[usize], target: usize) -> Result<()> {
        let tshift = self.bit_shift(target)?;
        let tmask = 1usize << tshift;
        let mut cmask = 0usize;
        for &c in controls {
            let s = self.bit_shift(c)?;
            if c == target || (cmask >> s) & 1 == 1 {
                return Err(Error::TargetIsControl(target));
            }
            cmask |= 1 << s;
        }
        for i in 0..self.amps.len() {
            if i & tmask == 0 && i & cmask == cmask {
                let j = i | tmask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    fn collapse(&mut self, mask: usize, bit: usize, prob: f64) {
        let keep = if bit == 1 { mask } else { 0 };
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == keep {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Sample one qubit: 0 with probability Σ|amp, bit=0|².
    fn sample(&mut self, qubit: usize) -> Result<i64> {
        let shift = self.bit_shift(qubit)?;
        let mask = 1usize << shift;
        let p0: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let u = self.next_f64();
        if u < p0 {
            self.collapse(mask, 0, p0);
            Ok(0)
        } else {
            self.collapse(mask, 1, 1.0 - p0);
            Ok(1)
        }
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Values collected by `out`, in execution order.
    pub outs: Vec<i64>,
    /// Final register values; None if never written.
    pub regs: Vec<Option<i64>>,
    /// Every register write in execution order (reg, value).
    pub reg_writes: Vec<(usize, i64)>,
    pub state: SimState,
}

pub fn run(code: &QuantumCode, seed: u64) -> Result<RunOutcome> {
    run_with(code, seed, &SimConfig::default())
}

pub fn run_with(code: &QuantumCode, seed: u64, config: &SimConfig) -> Result<RunOutcome> {
    let mut labels: HashMap<&str, usize> = HashMap::new();
    for (i, ins) in code.instructions.iter().enumerate() {
        if let Instruction::Label { name } = ins {
            labels.insert(name, i);
        }
    }
    let mut state = SimState::new(seed);
    let mut regs: Vec<Option<i64>> = vec![None; code.reg_count];
    let mut reg_writes = Vec::new();
    let mut outs = Vec::new();
    let mut pc = 0usize;
    let mut steps = 0u64;

    let read = |regs: &[Option<i64>], r: usize| -> Result<i64> {
        regs.get(r).copied().flatten().ok_or(Error::RegisterUnwritten(r))
    };

    while pc < code.instructions.len() {
        steps += 1;
        if steps > config.max_steps {
            return Err(Error::StepLimitExceeded(config.max_steps));
        }
        let mut next_pc = pc + 1;
        match &code.instructions[pc] {
            Instruction::Alloc { qubit } => state.alloc(*qubit, config.max_qubits)?,
            Instruction::Free { qubit } => state.free(*qubit)?,
            Instruction::Gate { spec, controls, target } => {
                state.apply_gate(spec.matrix(), controls, *target)?
            }
            Instruction::Measure { qubits, reg } => {
                let mut value: i64 = 0;
                for q in qubits {
                    let bit = state.sample(*q)?;
                    value = (value << 1) | bit;
                }
                regs[*reg] = Some(value);
                reg_writes.push((*reg, value));
            }
            Instruction::Set { reg, value } => {
                regs[*reg] = Some(*value);
                reg_writes.push((*reg, *value));
            }
            Instruction::Bin { op, dst, lhs, rhs } => {
                let v = op.apply(read(&regs, *lhs)?, read(&regs, *rhs)?)?;
                regs[*dst] = Some(v);
                reg_writes.push((*dst, v));
            }
            Instruction::Label { .. } => {}
            Instruction::Branch { reg, on_true, on_false } => {
                let target = if read(&regs, *reg)? != 0 { on_true } else { on_false };
                next_pc = labels[target.as_str()];
            }
            Instruction::Jump { target } => {
                next_pc = labels[target.as_str()];
            }
            Instruction::Out { reg } => outs.push(read(&regs, *reg)?),
        }
        if config.check_norm {
            let n = state.norm_sqr();
            if (n - 1.0).abs() > 1e-10 {
                panic!("state norm drifted to {n} after instruction {pc}");
            }
        }
        pc = next_pc;
    }
    Ok(RunOutcome { outs, regs, reg_writes, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateSpec;
    use crate::ir::{IrLevel, QuantumCode};

    fn code(instrs: Vec<Instruction>) -> QuantumCode {
        QuantumCode::new(instrs, IrLevel::Code)
    }

    #[test]
    fn hadamard_state_vector() {
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Gate { spec: GateSpec::H, controls: vec![], target: 0 },
        ]);
        let out = run(&c, 1).unwrap();
        let v = out.state.state_vector();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].re - h).abs() < 1e-12 && v[0].im.abs() < 1e-12);
        assert!((v[1].re - h).abs() < 1e-12 && v[1].im.abs() < 1e-12);
    }

    #[test]
    fn fresh_qubit_is_zero() {
        let c = code(vec![Instruction::Alloc { qubit: 0 }]);
        let out = run(&c, 1).unwrap();
        assert!((out.state.state_vector()[0].re - 1.0).abs() < 1e-15);
        assert_eq!(out.state.state_vector()[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ry_rotation_closed_form() {
        let theta = std::f64::consts::PI / 3.0;
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Gate { spec: GateSpec::Ry(theta), controls: vec![], target: 0 },
        ]);
        let out = run(&c, 1).unwrap();
        let v = out.state.state_vector();
        assert!((v[0].re - (theta / 2.0).cos()).abs() < 1e-12);
        assert!((v[1].re - (theta / 2.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn native_ccx_permutes_basis_state() {
        // |110⟩ -> |111⟩ in a single instruction.
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Alloc { qubit: 1 },
            Instruction::Alloc { qubit: 2 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![], target: 0 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![], target: 1 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![0, 1], target: 2 },
            Instruction::Measure { qubits: vec![0, 1, 2], reg: 0 },
            Instruction::Out { reg: 0 },
        ]);
        let out = run(&c, 9).unwrap();
        assert_eq!(out.outs, vec![0b111]);
    }

    #[test]
    fn measure_collapses_opposite_amplitudes_to_zero() {
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Alloc { qubit: 1 },
            Instruction::Gate { spec: GateSpec::H, controls: vec![], target: 0 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![0], target: 1 },
            Instruction::Measure { qubits: vec![0], reg: 0 },
        ]);
        let out = run(&c, 3).unwrap();
        let bit = out.regs[0].unwrap();
        let v = out.state.state_vector();
        for (i, a) in v.iter().enumerate() {
            if ((i >> 1) & 1) as i64 != bit {
                assert_eq!(*a, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn msb_first_bit_packing() {
        // q0 = 1, q1 = 0 -> measure [q0, q1] reads 0b10 = 2.
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Alloc { qubit: 1 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![], target: 0 },
            Instruction::Measure { qubits: vec![0, 1], reg: 0 },
            Instruction::Out { reg: 0 },
        ]);
        assert_eq!(run(&c, 1).unwrap().outs, vec![2]);
    }

    #[test]
    fn branch_on_zero_takes_false_label() {
        let c = crate::ir::parse(
            "set i0 = 0\nbr i0 @t @f\nlabel @t\nset i1 = 10\njmp @end\nlabel @f\nset i1 = 20\nlabel @end\nout i1\n",
        )
        .unwrap();
        assert_eq!(run(&c, 1).unwrap().outs, vec![20]);
        let c = crate::ir::parse(
            "set i0 = 7\nbr i0 @t @f\nlabel @t\nset i1 = 10\njmp @end\nlabel @f\nset i1 = 20\nlabel @end\nout i1\n",
        )
        .unwrap();
        assert_eq!(run(&c, 1).unwrap().outs, vec![10]);
    }

    #[test]
    fn determinism_bit_for_bit() {
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Gate { spec: GateSpec::H, controls: vec![], target: 0 },
            Instruction::Measure { qubits: vec![0], reg: 0 },
            Instruction::Out { reg: 0 },
        ]);
        for seed in 0..50 {
            let a = run(&c, seed).unwrap();
            let b = run(&c, seed).unwrap();
            assert_eq!(a.outs, b.outs);
            assert_eq!(a.state.state_vector(), b.state.state_vector());
        }
    }

    #[test]
    fn step_limit_guards_infinite_loop() {
        let c = crate::ir::parse("label @a\njmp @a\n").unwrap();
        let cfg = SimConfig { max_steps: 1000, ..SimConfig::default() };
        assert_eq!(run_with(&c, 1, &cfg).unwrap_err().code(), "E_STEP_LIMIT");
    }

    #[test]
    fn qubit_limit_enforced() {
        let instrs: Vec<Instruction> =
            (0..5).map(|q| Instruction::Alloc { qubit: q }).collect();
        let cfg = SimConfig { max_qubits: 4, ..SimConfig::default() };
        assert_eq!(run_with(&code(instrs), 1, &cfg).unwrap_err().code(), "E_QUBIT_LIMIT");
    }

    #[test]
    fn division_by_zero_at_execution() {
        let c = crate::ir::parse("set i0 = 1\nset i1 = 0\nbin div i2, i0, i1\nout i2\n").unwrap();
        assert_eq!(run(&c, 1).unwrap_err().code(), "E_DIV_BY_ZERO");
    }

    #[test]
    fn free_removes_qubit_and_allows_realloc() {
        let c = code(vec![
            Instruction::Alloc { qubit: 0 },
            Instruction::Gate { spec: GateSpec::X, controls: vec![], target: 0 },
            Instruction::Measure { qubits: vec![0], reg: 0 },
            Instruction::Free { qubit: 0 },
            Instruction::Alloc { qubit: 0 },
            Instruction::Measure { qubits: vec![0], reg: 1 },
            Instruction::Out { reg: 0 },
            Instruction::Out { reg: 1 },
        ]);
        let out = run(&c, 1).unwrap();
        assert_eq!(out.outs, vec![1, 0]);
    }

    #[test]
    fn gate_times_inverse_preserves_random_states() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let gates = [
            GateSpec::X,
            GateSpec::Y,
            GateSpec::Z,
            GateSpec::H,
            GateSpec::S,
            GateSpec::Sdg,
            GateSpec::T,
            GateSpec::Tdg,
            GateSpec::Phase(0.71),
            GateSpec::Rx(2.2),
            GateSpec::Ry(-0.4),
            GateSpec::Rz(1.3),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5;
        for g in gates {
            for _ in 0..50 {
                let mut amps: Vec<Complex64> =
                    (0..4).map(|_| Complex64::new(unit(), unit())).collect();
                let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                for a in &mut amps {
                    *a /= norm;
                }
                let mut st = SimState::new(0);
                st.live = vec![0, 1];
                st.amps = amps.clone();
                st.apply_gate(g.matrix(), &[], 1).unwrap();
                st.apply_gate(g.inverse().matrix(), &[], 1).unwrap();
                for (a, b) in st.amps.iter().zip(&amps) {
                    assert!((a - b).norm() < 1e-12, "{g:?}");
                }
            }
        }
    }
}
