//! Quantum compiler: architecture-independent peephole passes,
//! multi-control decomposition, coupling-graph mapping, and lowering to
//! assembly level.
//!
//! All peephole passes are basic-block local. Block boundaries are
//! labels, branches, jumps and measurements; no commutation analysis is
//! performed across them.

use crate::error::{Error, Result};
use crate::gate::{GateSpec, RotationAxis};
use crate::graph::CouplingGraph;
use crate::ir::{Instruction, IrLevel, QuantumCode};

const ANGLE_EPS: f64 = 1e-12;

fn is_block_boundary(ins: &Instruction) -> bool {
    matches!(
        ins,
        Instruction::Label { .. }
            | Instruction::Branch { .. }
            | Instruction::Jump { .. }
            | Instruction::Measure { .. }
    )
}

fn touches_any(ins: &Instruction, qubits: &[usize]) -> bool {
    ins.qubits().iter().any(|q| qubits.contains(q))
}

fn same_operands(a_controls: &[usize], a_target: usize, b: &Instruction) -> bool {
    match b {
        Instruction::Gate { controls, target, .. } => {
            *target == a_target && controls == a_controls
        }
        _ => false,
    }
}

/// Remove adjacent gate/inverse pairs on identical operands, to fixpoint.
/// A pair is adjacent when nothing between the two touches their qubits
/// and no block boundary intervenes.
pub fn cancel_inverse_pairs(code: &QuantumCode) -> QuantumCode {
    let mut instructions = code.instructions.clone();
    loop {
        let mut removed = None;
        'scan: for i in 0..instructions.len() {
            let Instruction::Gate { spec, controls, target } = &instructions[i] else {
                continue;
            };
            let qubits = instructions[i].qubits();
            let inv = spec.inverse();
            let (controls, target) = (controls.clone(), *target);
            for j in i + 1..instructions.len() {
                if is_block_boundary(&instructions[j]) {
                    break;
                }
                if !touches_any(&instructions[j], &qubits) {
                    continue;
                }
                if same_operands(&controls, target, &instructions[j]) {
                    if let Instruction::Gate { spec: other, .. } = &instructions[j] {
                        if *other == inv {
                            removed = Some((i, j));
                            break 'scan;
                        }
                    }
                }
                break;
            }
        }
        match removed {
            Some((i, j)) => {
                instructions.remove(j);
                instructions.remove(i);
            }
            None => break,
        }
    }
    let mut out = QuantumCode::new(instructions, code.level);
    out.reg_count = code.reg_count;
    out
}

fn angle_is_identity(angle: f64, axis: RotationAxis) -> bool {
    let period = axis.identity_period();
    let r = angle.rem_euclid(period);
    r.min(period - r) < ANGLE_EPS
}

/// Merge adjacent same-axis rotations on identical operands; drop any
/// rotation whose angle is the identity modulo its period.
pub fn merge_rotations(code: &QuantumCode) -> QuantumCode {
    let mut instructions = code.instructions.clone();
    loop {
        let mut action: Option<(usize, Option<(usize, f64)>)> = None;
        'scan: for i in 0..instructions.len() {
            let Instruction::Gate { spec, controls, target } = &instructions[i] else {
                continue;
            };
            let Some(axis) = spec.rotation_axis() else { continue };
            let angle = spec.param().expect("rotations carry an angle");
            if angle_is_identity(angle, axis) {
                action = Some((i, None));
                break;
            }
            let qubits = instructions[i].qubits();
            let (controls, target) = (controls.clone(), *target);
            for j in i + 1..instructions.len() {
                if is_block_boundary(&instructions[j]) {
                    break;
                }
                if !touches_any(&instructions[j], &qubits) {
                    continue;
                }
                if same_operands(&controls, target, &instructions[j]) {
                    if let Instruction::Gate { spec: other, .. } = &instructions[j] {
                        if other.rotation_axis() == Some(axis) {
                            let merged = angle + other.param().expect("rotation angle");
                            action = Some((i, Some((j, merged))));
                            break 'scan;
                        }
                    }
                }
                break;
            }
        }
        match action {
            Some((i, None)) => {
                instructions.remove(i);
            }
            Some((i, Some((j, merged)))) => {
                let Instruction::Gate { spec, .. } = &mut instructions[i] else { unreachable!() };
                let axis = spec.rotation_axis().expect("rotation");
                *spec = GateSpec::with_angle(axis, merged);
                instructions.remove(j);
            }
            None => break,
        }
    }
    let mut out = QuantumCode::new(instructions, code.level);
    out.reg_count = code.reg_count;
    out
}

/// Standard 15-gate Toffoli: 6 CX plus {H, T, Tdg} singles. Exact CCX.
fn emit_toffoli(out: &mut Vec<Instruction>, c0: usize, c1: usize, t: usize) {
    use GateSpec::*;
    let g = |spec, controls: Vec<usize>, target| Instruction::Gate { spec, controls, target };
    out.push(g(H, vec![], t));
    out.push(g(X, vec![c1], t));
    out.push(g(Tdg, vec![], t));
    out.push(g(X, vec![c0], t));
    out.push(g(T, vec![], t));
    out.push(g(X, vec![c1], t));
    out.push(g(Tdg, vec![], t));
    out.push(g(X, vec![c0], t));
    out.push(g(T, vec![], c1));
    out.push(g(T, vec![], t));
    out.push(g(H, vec![], t));
    out.push(g(X, vec![c0], c1));
    out.push(g(T, vec![], c0));
    out.push(g(Tdg, vec![], c1));
    out.push(g(X, vec![c0], c1));
}

/// ZY decomposition U = e^{iα} Rz(β) Ry(γ) Rz(δ).
fn zyz_angles(spec: GateSpec) -> (f64, f64, f64, f64) {
    let m = spec.matrix();
    let (u00, u01, u10, u11) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let gamma = 2.0 * u10.norm().atan2(u00.norm());
    if u10.norm() < 1e-12 {
        // Diagonal: β+δ fixed, split arbitrarily.
        let alpha = (u00.arg() + u11.arg()) / 2.0;
        let beta = u11.arg() - u00.arg();
        (alpha, beta, gamma, 0.0)
    } else if u00.norm() < 1e-12 {
        // Anti-diagonal.
        let alpha = (u10.arg() + (-u01).arg()) / 2.0;
        let beta_minus_delta = 2.0 * (u10.arg() - alpha);
        (alpha, beta_minus_delta / 2.0, gamma, -beta_minus_delta / 2.0)
    } else {
        let alpha = (u00.arg() + u11.arg()) / 2.0;
        let beta_plus_delta = u11.arg() - u00.arg();
        let beta_minus_delta = 2.0 * (u10.arg() - alpha);
        (
            alpha,
            (beta_plus_delta + beta_minus_delta) / 2.0,
            gamma,
            (beta_plus_delta - beta_minus_delta) / 2.0,
        )
    }
}

/// Controlled-U via the ABC construction: U = e^{iα} A X B X C with
/// A B C = I, lowered to CX plus single-qubit rotations and a phase on
/// the control.
fn emit_controlled_unitary(out: &mut Vec<Instruction>, spec: GateSpec, c: usize, t: usize) {
    if spec == GateSpec::X {
        out.push(Instruction::Gate { spec, controls: vec![c], target: t });
        return;
    }
    let (alpha, beta, gamma, delta) = zyz_angles(spec);
    let g = |spec, controls: Vec<usize>, target| Instruction::Gate { spec, controls, target };
    out.push(g(GateSpec::Rz((delta - beta) / 2.0), vec![], t));
    out.push(g(GateSpec::X, vec![c], t));
    out.push(g(GateSpec::Rz(-(delta + beta) / 2.0), vec![], t));
    out.push(g(GateSpec::Ry(-gamma / 2.0), vec![], t));
    out.push(g(GateSpec::X, vec![c], t));
    out.push(g(GateSpec::Ry(gamma / 2.0), vec![], t));
    out.push(g(GateSpec::Rz(beta), vec![], t));
    out.push(g(GateSpec::Phase(alpha), vec![], c));
}

/// Rewrite every gate down to the ≤1-control set, where the only
/// controlled gate is CX.
///
/// CCX expands directly to the 15-gate circuit. Gates with more controls
/// (or two controls on a non-X gate) go through a Toffoli ladder that
/// ANDs the controls into freshly allocated ancillas, applies the singly
/// controlled gate, then uncomputes; the ancillas return to |0⟩ and are
/// freed in place.
pub fn decompose_multictrl(code: &QuantumCode) -> QuantumCode {
    let mut out = Vec::new();
    let mut next_ancilla = code.qubit_count;
    for ins in &code.instructions {
        let Instruction::Gate { spec, controls, target } = ins else {
            out.push(ins.clone());
            continue;
        };
        match controls.len() {
            0 => out.push(ins.clone()),
            1 => emit_controlled_unitary(&mut out, *spec, controls[0], *target),
            2 if *spec == GateSpec::X => emit_toffoli(&mut out, controls[0], controls[1], *target),
            n => {
                let ancillas: Vec<usize> = (0..n - 1).map(|k| next_ancilla + k).collect();
                next_ancilla += n - 1;
                for &a in &ancillas {
                    out.push(Instruction::Alloc { qubit: a });
                }
                let compute = |out: &mut Vec<Instruction>| {
                    emit_toffoli(out, controls[0], controls[1], ancillas[0]);
                    for k in 2..n {
                        emit_toffoli(out, controls[k], ancillas[k - 2], ancillas[k - 1]);
                    }
                };
                compute(&mut out);
                emit_controlled_unitary(&mut out, *spec, ancillas[n - 2], *target);
                // Uncompute in reverse; each Toffoli is self-inverse.
                for k in (2..n).rev() {
                    emit_toffoli(&mut out, controls[k], ancillas[k - 2], ancillas[k - 1]);
                }
                emit_toffoli(&mut out, controls[0], controls[1], ancillas[0]);
                for &a in ancillas.iter().rev() {
                    out.push(Instruction::Free { qubit: a });
                }
            }
        }
    }
    let mut code_out = QuantumCode::new(out, code.level);
    code_out.reg_count = code.reg_count;
    code_out
}

/// Tracks the logical→physical assignment while inserting SWAPs.
struct Placement {
    to_physical: Vec<usize>,
    to_logical: Vec<usize>,
}

impl Placement {
    fn identity(n: usize) -> Placement {
        Placement { to_physical: (0..n).collect(), to_logical: (0..n).collect() }
    }

    fn swap_physical(&mut self, a: usize, b: usize, out: &mut Vec<Instruction>) {
        // SWAP as 3 CX on physical wires.
        for (c, t) in [(a, b), (b, a), (a, b)] {
            out.push(Instruction::Gate { spec: GateSpec::X, controls: vec![c], target: t });
        }
        let (la, lb) = (self.to_logical[a], self.to_logical[b]);
        self.to_logical.swap(a, b);
        self.to_physical[la] = b;
        self.to_physical[lb] = a;
    }

    fn is_identity(&self) -> bool {
        self.to_physical.iter().enumerate().all(|(l, p)| l == *p)
    }

    /// Undo the permutation with SWAPs so that every control-flow path
    /// observes the same placement. Routes tokens leaf-first over a BFS
    /// spanning tree so fixed positions are never disturbed.
    fn restore_identity(&mut self, g: &CouplingGraph, out: &mut Vec<Instruction>) {
        if self.is_identity() {
            return;
        }
        let n = g.node_count();
        let mut tree_adj = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && g.has_edge(u, v) {
                    seen[v] = true;
                    tree_adj[u].push(v);
                    tree_adj[v].push(u);
                    queue.push_back(v);
                }
            }
        }
        let mut alive = vec![true; n];
        let mut alive_count = n;
        while alive_count > 1 {
            let leaf = (0..n)
                .find(|&v| alive[v] && tree_adj[v].iter().filter(|&&u| alive[u]).count() <= 1)
                .expect("a tree always has a leaf");
            // Bring the token destined for `leaf` to it along tree edges.
            let mut pos = self.to_physical[leaf];
            while pos != leaf {
                let next = tree_path_step(&tree_adj, &alive, pos, leaf);
                self.swap_physical(pos, next, out);
                pos = next;
            }
            alive[leaf] = false;
            alive_count -= 1;
        }
    }
}

/// First step on the unique tree path from `from` to `to` within alive
/// vertices.
fn tree_path_step(tree_adj: &[Vec<usize>], alive: &[bool], from: usize, to: usize) -> usize {
    let mut parent = vec![usize::MAX; tree_adj.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    parent[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &v in &tree_adj[u] {
            if alive[v] && parent[v] == usize::MAX {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut cur = to;
    while parent[cur] != from {
        cur = parent[cur];
    }
    cur
}

/// Map logical qubits onto the coupling graph: identity initial
/// placement, greedy shortest-path SWAP insertion moving the control
/// toward the target before each non-adjacent CX. The placement is
/// restored to identity at every control-flow boundary so branching
/// paths stay consistent. Returns the rewritten code and the final
/// logical→physical map.
pub fn map_to_coupling(
    code: &QuantumCode,
    g: &CouplingGraph,
) -> Result<(QuantumCode, Vec<usize>)> {
    let n = g.node_count();
    if code.qubit_count > n {
        return Err(Error::TooManyQubits(n));
    }
    for ins in &code.instructions {
        if let Instruction::Gate { controls, .. } = ins {
            if controls.len() > 1 {
                return Err(Error::LevelViolation(
                    "mapping requires gates with at most one control".into(),
                ));
            }
        }
    }
    let mut place = Placement::identity(n);
    let mut out = Vec::new();
    for ins in &code.instructions {
        match ins {
            Instruction::Label { .. } | Instruction::Branch { .. } | Instruction::Jump { .. } => {
                place.restore_identity(g, &mut out);
                out.push(ins.clone());
            }
            Instruction::Alloc { qubit } => {
                out.push(Instruction::Alloc { qubit: place.to_physical[*qubit] })
            }
            Instruction::Free { qubit } => {
                out.push(Instruction::Free { qubit: place.to_physical[*qubit] })
            }
            Instruction::Measure { qubits, reg } => out.push(Instruction::Measure {
                qubits: qubits.iter().map(|q| place.to_physical[*q]).collect(),
                reg: *reg,
            }),
            Instruction::Gate { spec, controls, target } => {
                if controls.is_empty() {
                    out.push(Instruction::Gate {
                        spec: *spec,
                        controls: vec![],
                        target: place.to_physical[*target],
                    });
                } else {
                    let (c, t) = (controls[0], *target);
                    let mut pc = place.to_physical[c];
                    let pt = place.to_physical[t];
                    if !g.has_edge(pc, pt) {
                        let path = g.shortest_path(pc, pt);
                        for k in 0..path.len() - 2 {
                            place.swap_physical(path[k], path[k + 1], &mut out);
                        }
                        pc = place.to_physical[c];
                    }
                    out.push(Instruction::Gate { spec: *spec, controls: vec![pc], target: pt });
                }
            }
            other => out.push(other.clone()),
        }
    }
    let mut mapped = QuantumCode::new(out, code.level);
    mapped.reg_count = code.reg_count;
    Ok((mapped, place.to_physical))
}

/// Full lowering pipeline to assembly level:
/// cancel → merge → decompose → cancel → merge, then optional mapping.
pub fn emit_assembly(code: &QuantumCode) -> Result<QuantumCode> {
    emit_assembly_mapped(code, None).map(|(c, _)| c)
}

pub fn emit_assembly_mapped(
    code: &QuantumCode,
    coupling: Option<&CouplingGraph>,
) -> Result<(QuantumCode, Option<Vec<usize>>)> {
    let code = cancel_inverse_pairs(code);
    let code = merge_rotations(&code);
    let code = decompose_multictrl(&code);
    let code = cancel_inverse_pairs(&code);
    let mut code = merge_rotations(&code);
    let map = match coupling {
        Some(g) => {
            let (mapped, map) = map_to_coupling(&code, g)?;
            code = mapped;
            Some(map)
        }
        None => None,
    };
    code.level = IrLevel::Assembly;
    code.validate()?;
    Ok((code, map))
}
