//! Lazy quantum code generation from the runtime AST.
//!
//! Generation starts at the demanded futures and emits only their
//! dependency cone: the classical expression closure, every measurement
//! in it, the measured qubits closed under gate interaction, and the
//! control-flow regions guarding any of those. Instructions keep their
//! original recording order; structured markers lower to labels and
//! branches. Conditionals that were resolved classically were never
//! recorded, so nothing is emitted for them.

use crate::error::{Error, Result};
use crate::ir::{Instruction, IrLevel, QuantumCode};
use crate::process::{Future, Node, NodeId, Process};
use std::collections::{HashMap, HashSet};

/// Maps futures to the output registers holding their values.
#[derive(Debug, Clone)]
pub struct RegisterMap {
    map: HashMap<NodeId, usize>,
}

impl RegisterMap {
    pub fn register_of(&self, f: &Future) -> Option<usize> {
        self.map.get(&f.node).copied()
    }
}

/// Generate code for the dependency cone of `demanded`, plus the
/// future-to-register map for reading results back.
pub fn build_code(p: &Process, demanded: &[&Future]) -> Result<(QuantumCode, RegisterMap)> {
    let nodes: Vec<NodeId> = demanded.iter().map(|f| f.node).collect();
    let (code, pairs) = build_code_from_nodes(p, &nodes)?;
    Ok((code, RegisterMap { map: pairs.into_iter().collect() }))
}

#[derive(Debug, Clone, Copy)]
enum RegionKind {
    If { else_idx: usize },
    While { test_idx: usize },
}

#[derive(Debug, Clone, Copy)]
struct Region {
    kind: RegionKind,
    begin_idx: usize,
    end_idx: usize,
    cond: NodeId,
}

/// Union-find over qubit indices: qubits sharing a gate or a joint
/// measurement belong to one interaction component.
struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Components {
        Components { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

pub(crate) fn build_code_from_nodes(
    p: &Process,
    demanded: &[NodeId],
) -> Result<(QuantumCode, Vec<(NodeId, usize)>)> {
    if demanded.is_empty() {
        return Err(Error::EmptyDemand);
    }
    for &d in demanded {
        if d >= p.nodes.len() {
            return Err(Error::ForeignFuture);
        }
    }

    let regions = collect_regions(p);
    let region_at: HashMap<usize, usize> = regions
        .iter()
        .enumerate()
        .map(|(r, reg)| (reg.begin_idx, r))
        .collect();

    // Interaction closure over the whole recorded history.
    let mut comps = Components::new(p.qubit_count().max(1));
    for node in &p.nodes {
        let qs = node.touched_qubits();
        if matches!(node, Node::Gate { .. } | Node::Measure { .. }) {
            for w in qs.windows(2) {
                comps.union(w[0], w[1]);
            }
        }
    }
    let mut component_members: HashMap<usize, Vec<usize>> = HashMap::new();
    for q in 0..p.qubit_count() {
        component_members.entry(comps.find(q)).or_default().push(q);
    }
    // Measures grouped by component for the closure step.
    let mut measures_by_component: HashMap<usize, Vec<NodeId>> = HashMap::new();
    for &id in &p.program {
        if let Node::Measure { qubits, .. } = &p.nodes[id] {
            let root = comps.find(qubits[0]);
            measures_by_component.entry(root).or_default().push(id);
        }
    }

    let mut cone_nodes: HashSet<NodeId> = HashSet::new();
    let mut cone_qubits: HashSet<usize> = HashSet::new();

    // Classical closure with measurement-qubit expansion.
    fn add_classical(
        p: &Process,
        node: NodeId,
        cone_nodes: &mut HashSet<NodeId>,
        cone_qubits: &mut HashSet<usize>,
        comps: &mut Components,
        component_members: &HashMap<usize, Vec<usize>>,
        measures_by_component: &HashMap<usize, Vec<NodeId>>,
    ) {
        if !cone_nodes.insert(node) {
            return;
        }
        match &p.nodes[node] {
            Node::BinOp { lhs, rhs, .. } => {
                let (lhs, rhs) = (*lhs, *rhs);
                add_classical(p, lhs, cone_nodes, cone_qubits, comps, component_members, measures_by_component);
                add_classical(p, rhs, cone_nodes, cone_qubits, comps, component_members, measures_by_component);
            }
            Node::Measure { qubits, .. } => {
                for &q in qubits.clone().iter() {
                    let root = comps.find(q);
                    if cone_qubits.contains(&q) {
                        continue;
                    }
                    for &m in &component_members[&root] {
                        cone_qubits.insert(m);
                    }
                    // Every measurement in the component collapses state
                    // the cone depends on, so it must be emitted too.
                    if let Some(ms) = measures_by_component.get(&root) {
                        for &m in ms.clone().iter() {
                            add_classical(p, m, cone_nodes, cone_qubits, comps, component_members, measures_by_component);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    for &d in demanded {
        add_classical(
            p,
            d,
            &mut cone_nodes,
            &mut cone_qubits,
            &mut comps,
            &component_members,
            &measures_by_component,
        );
    }

    // Mark control-flow regions containing any emitted item; their
    // conditions join the cone, which can pull in more qubits. Iterate
    // to fixpoint.
    let mut marked: HashSet<usize> = HashSet::new();
    loop {
        let mut changed = false;
        for (r, region) in regions.iter().enumerate() {
            if marked.contains(&r) {
                continue;
            }
            let contains_emitted = (region.begin_idx + 1..region.end_idx).any(|i| {
                let id = p.program[i];
                if let Some(&inner) = region_at.get(&i) {
                    if marked.contains(&inner) {
                        return true;
                    }
                }
                item_emitted(p, id, &cone_nodes, &cone_qubits)
            });
            if contains_emitted {
                marked.insert(r);
                add_classical(
                    p,
                    region.cond,
                    &mut cone_nodes,
                    &mut cone_qubits,
                    &mut comps,
                    &component_members,
                    &measures_by_component,
                );
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Emission: single walk in recording order. Registers are numbered
    // in emission order, one per classical node, never reused.
    let mut instructions = Vec::new();
    let mut regs: HashMap<NodeId, usize> = HashMap::new();
    let mut next_reg = 0usize;
    let mut next_label = 0usize;
    let fresh = |next_label: &mut usize| {
        let l = format!("L{next_label}");
        *next_label += 1;
        l
    };
    // (region index, labels) for open regions during the walk.
    enum OpenLabels {
        If { skip: bool, else_label: Option<String>, end_label: String },
        While { skip: bool, head: String, end: Option<String> },
    }
    let mut open: Vec<OpenLabels> = Vec::new();

    let mut alloc_reg = |node: NodeId, regs: &mut HashMap<NodeId, usize>| -> usize {
        *regs.entry(node).or_insert_with(|| {
            let r = next_reg;
            next_reg += 1;
            r
        })
    };

    for (i, &id) in p.program.iter().enumerate() {
        match &p.nodes[id] {
            Node::Alloc { qubit } if cone_qubits.contains(qubit) => {
                instructions.push(Instruction::Alloc { qubit: *qubit });
            }
            Node::Free { qubit, .. } if cone_qubits.contains(qubit) => {
                instructions.push(Instruction::Free { qubit: *qubit });
            }
            Node::Gate { spec, controls, target, .. } if cone_qubits.contains(target) => {
                instructions.push(Instruction::Gate {
                    spec: *spec,
                    controls: controls.clone(),
                    target: *target,
                });
            }
            Node::Measure { qubits, .. } if qubits.iter().any(|q| cone_qubits.contains(q)) => {
                let reg = alloc_reg(id, &mut regs);
                instructions.push(Instruction::Measure { qubits: qubits.clone(), reg });
            }
            Node::IntLiteral { value } if cone_nodes.contains(&id) => {
                let reg = alloc_reg(id, &mut regs);
                instructions.push(Instruction::Set { reg, value: *value });
            }
            Node::BinOp { op, lhs, rhs } if cone_nodes.contains(&id) => {
                let (lhs_reg, rhs_reg) = (regs[lhs], regs[rhs]);
                let reg = alloc_reg(id, &mut regs);
                instructions.push(Instruction::Bin { op: *op, dst: reg, lhs: lhs_reg, rhs: rhs_reg });
            }
            Node::IfBegin { cond } => {
                let r = region_at[&i];
                if !marked.contains(&r) {
                    open.push(OpenLabels::If {
                        skip: true,
                        else_label: None,
                        end_label: String::new(),
                    });
                    continue;
                }
                let region = &regions[r];
                let RegionKind::If { else_idx } = region.kind else { unreachable!() };
                let then_live = span_emitted(p, region.begin_idx + 1, else_idx, &cone_nodes, &cone_qubits, &region_at, &marked);
                let else_live = span_emitted(p, else_idx + 1, region.end_idx, &cone_nodes, &cone_qubits, &region_at, &marked);
                let end_label = fresh(&mut next_label);
                let then_label = then_live.then(|| fresh(&mut next_label));
                let else_label = else_live.then(|| fresh(&mut next_label));
                instructions.push(Instruction::Branch {
                    reg: regs[cond],
                    on_true: then_label.clone().unwrap_or_else(|| end_label.clone()),
                    on_false: else_label.clone().unwrap_or_else(|| end_label.clone()),
                });
                if let Some(t) = &then_label {
                    instructions.push(Instruction::Label { name: t.clone() });
                }
                open.push(OpenLabels::If { skip: false, else_label, end_label });
            }
            Node::IfElse => {
                let Some(OpenLabels::If { skip, else_label, end_label, .. }) = open.last() else {
                    unreachable!("unbalanced if markers");
                };
                if *skip {
                    continue;
                }
                if let Some(e) = else_label.clone() {
                    instructions.push(Instruction::Jump { target: end_label.clone() });
                    instructions.push(Instruction::Label { name: e });
                }
            }
            Node::IfEnd => {
                let Some(OpenLabels::If { skip, end_label, .. }) = open.pop() else {
                    unreachable!("unbalanced if markers");
                };
                if !skip {
                    instructions.push(Instruction::Label { name: end_label });
                }
            }
            Node::WhileBegin => {
                let r = region_at[&i];
                if !marked.contains(&r) {
                    open.push(OpenLabels::While { skip: true, head: String::new(), end: None });
                    continue;
                }
                let head = fresh(&mut next_label);
                instructions.push(Instruction::Label { name: head.clone() });
                open.push(OpenLabels::While { skip: false, head, end: None });
            }
            Node::WhileTest { cond } => {
                let Some(OpenLabels::While { skip, end, .. }) = open.last_mut() else {
                    unreachable!("unbalanced while markers");
                };
                if *skip {
                    continue;
                }
                let body = fresh(&mut next_label);
                let end_label = fresh(&mut next_label);
                *end = Some(end_label.clone());
                instructions.push(Instruction::Branch {
                    reg: regs[cond],
                    on_true: body.clone(),
                    on_false: end_label,
                });
                instructions.push(Instruction::Label { name: body });
            }
            Node::WhileEnd => {
                let Some(OpenLabels::While { skip, head, end }) = open.pop() else {
                    unreachable!("unbalanced while markers");
                };
                if skip {
                    continue;
                }
                instructions.push(Instruction::Jump { target: head });
                instructions.push(Instruction::Label {
                    name: end.expect("while test seen before end"),
                });
            }
            _ => {}
        }
    }

    for &d in demanded {
        let reg = *regs.get(&d).ok_or(Error::ForeignFuture)?;
        instructions.push(Instruction::Out { reg });
    }

    let code = QuantumCode::new(instructions, IrLevel::Code);
    // Every register-bearing node is mapped, not just the demanded ones:
    // execution fulfills the whole cone in one shot.
    let map = regs.into_iter().collect();
    Ok((code, map))
}

fn item_emitted(
    p: &Process,
    id: NodeId,
    cone_nodes: &HashSet<NodeId>,
    cone_qubits: &HashSet<usize>,
) -> bool {
    match &p.nodes[id] {
        Node::Alloc { qubit } | Node::Free { qubit, .. } => cone_qubits.contains(qubit),
        Node::Gate { target, .. } => cone_qubits.contains(target),
        Node::Measure { qubits, .. } => qubits.iter().any(|q| cone_qubits.contains(q)),
        Node::IntLiteral { .. } | Node::BinOp { .. } => cone_nodes.contains(&id),
        _ => false,
    }
}

fn span_emitted(
    p: &Process,
    from: usize,
    to: usize,
    cone_nodes: &HashSet<NodeId>,
    cone_qubits: &HashSet<usize>,
    region_at: &HashMap<usize, usize>,
    marked: &HashSet<usize>,
) -> bool {
    (from..to).any(|i| {
        if let Some(r) = region_at.get(&i) {
            if marked.contains(r) {
                return true;
            }
        }
        item_emitted(p, p.program[i], cone_nodes, cone_qubits)
    })
}

/// Match structured markers into regions by a single scan.
fn collect_regions(p: &Process) -> Vec<Region> {
    let mut regions = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for (i, &id) in p.program.iter().enumerate() {
        match &p.nodes[id] {
            Node::IfBegin { cond } => {
                stack.push(regions.len());
                regions.push(Region {
                    kind: RegionKind::If { else_idx: usize::MAX },
                    begin_idx: i,
                    end_idx: usize::MAX,
                    cond: *cond,
                });
            }
            Node::IfElse => {
                let r = *stack.last().expect("if markers balanced");
                if let RegionKind::If { else_idx } = &mut regions[r].kind {
                    *else_idx = i;
                }
            }
            Node::IfEnd => {
                let r = stack.pop().expect("if markers balanced");
                regions[r].end_idx = i;
            }
            Node::WhileBegin => {
                stack.push(regions.len());
                regions.push(Region {
                    kind: RegionKind::While { test_idx: usize::MAX },
                    begin_idx: i,
                    end_idx: usize::MAX,
                    cond: usize::MAX,
                });
            }
            Node::WhileTest { cond } => {
                let r = *stack.last().expect("while markers balanced");
                if let RegionKind::While { test_idx } = &mut regions[r].kind {
                    *test_idx = i;
                }
                regions[r].cond = *cond;
            }
            Node::WhileEnd => {
                let r = stack.pop().expect("while markers balanced");
                regions[r].end_idx = i;
            }
            _ => {}
        }
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateSpec::*;
    use crate::ir::BinOpKind;

    #[test]
    fn untouched_qubit_component_is_pruned() {
        let mut p = Process::new(0);
        let q = p.alloc().unwrap();
        let other = p.alloc().unwrap();
        p.gate(H, &q).unwrap();
        p.gate(X, &other).unwrap();
        let m = p.measure(&[&q]).unwrap();
        let (code, _) = build_code(&p, &[&m]).unwrap();
        // q1 never interacts with q0: its alloc and gate are absent.
        assert!(!code.instructions.iter().any(|ins| ins.qubits().contains(&1)));
        assert_eq!(code.qubit_count, 1);
    }

    #[test]
    fn entangled_qubits_are_kept() {
        let mut p = Process::new(0);
        let a = p.alloc().unwrap();
        let b = p.alloc().unwrap();
        p.gate(H, &a).unwrap();
        p.ctrl(&[&a], |p| p.gate(X, &b)).unwrap();
        let m = p.measure(&[&a]).unwrap();
        let (code, _) = build_code(&p, &[&m]).unwrap();
        assert_eq!(code.qubit_count, 2);
    }

    #[test]
    fn pure_classical_demand_emits_no_quantum_instructions() {
        let mut p = Process::new(0);
        let q = p.alloc().unwrap();
        p.gate(H, &q).unwrap();
        let a = p.lift_int(2);
        let b = p.lift_int(3);
        let sum = p.bin_op(BinOpKind::Add, &a, &b).unwrap();
        let (code, map) = build_code(&p, &[&sum]).unwrap();
        for ins in &code.instructions {
            assert!(matches!(
                ins,
                Instruction::Set { .. } | Instruction::Bin { .. } | Instruction::Out { .. }
            ));
        }
        assert_eq!(map.register_of(&sum), Some(2));
        let out = crate::sim::run(&code, 1).unwrap();
        assert_eq!(out.outs, vec![5]);
    }

    #[test]
    fn quantum_conditional_lowers_to_branch() {
        let mut p = Process::new(0);
        let q = p.alloc().unwrap();
        let t = p.alloc().unwrap();
        p.gate(H, &q).unwrap();
        p.ctrl(&[&q], |p| p.gate(X, &t)).unwrap();
        let m = p.measure(&[&q]).unwrap();
        p.if_then_else(&m, |p| p.gate(Z, &t), |_| Ok(())).unwrap();
        let mt = p.measure(&[&t]).unwrap();
        let (code, _) = build_code(&p, &[&mt]).unwrap();
        code.validate().unwrap();
        let has_branch = code
            .instructions
            .iter()
            .any(|i| matches!(i, Instruction::Branch { .. }));
        assert!(has_branch);
    }

    #[test]
    fn classical_conditional_leaves_no_branch() {
        let mut p = Process::new(0);
        let q = p.alloc().unwrap();
        let one = p.lift_int(1);
        p.if_then_else(&one, |p| p.gate(X, &q), |_| Ok(())).unwrap();
        let m = p.measure(&[&q]).unwrap();
        let (code, _) = build_code(&p, &[&m]).unwrap();
        assert!(!code
            .instructions
            .iter()
            .any(|i| matches!(i, Instruction::Branch { .. } | Instruction::Label { .. })));
    }

    #[test]
    fn while_lowers_to_label_branch_cycle() {
        let mut p = Process::new(0);
        let mut measured = None;
        p.while_loop(
            |p| {
                let q = p.alloc()?;
                p.gate(H, &q)?;
                let m = p.measure(&[&q])?;
                p.free(&q)?;
                let zero = p.lift_int(0);
                let cond = p.bin_op(BinOpKind::Eq, &m, &zero)?;
                measured = Some(m);
                Ok(cond)
            },
            |_| Ok(()),
        )
        .unwrap();
        let m = measured.unwrap();
        let (code, _) = build_code(&p, &[&m]).unwrap();
        code.validate().unwrap();
        let labels = code
            .instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Label { .. }))
            .count();
        assert!(labels >= 2);
        assert!(code.instructions.iter().any(|i| matches!(i, Instruction::Jump { .. })));
        assert!(code.instructions.iter().any(|i| matches!(i, Instruction::Branch { .. })));
        // Loop runs on the quantum side and terminates with 1.
        let out = crate::sim::run(&code, 42).unwrap();
        assert_eq!(out.outs, vec![1]);
    }

    #[test]
    fn build_is_idempotent() {
        let mut p = Process::new(0);
        let a = p.alloc().unwrap();
        let b = p.alloc().unwrap();
        p.gate(H, &a).unwrap();
        p.ctrl(&[&a], |p| p.gate(X, &b)).unwrap();
        let m = p.measure(&[&a, &b]).unwrap();
        let (c1, _) = build_code(&p, &[&m]).unwrap();
        let (c2, _) = build_code(&p, &[&m]).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn empty_demand_rejected() {
        let p = Process::new(0);
        assert_eq!(build_code(&p, &[]).unwrap_err().code(), "E_EMPTY_DEMAND");
    }

    #[test]
    fn emission_preserves_recording_order() {
        let mut p = Process::new(0);
        let a = p.alloc().unwrap();
        let b = p.alloc().unwrap();
        p.gate(H, &a).unwrap();
        p.gate(T, &b).unwrap();
        p.ctrl(&[&a], |p| p.gate(X, &b)).unwrap();
        p.gate(Z, &a).unwrap();
        let m = p.measure(&[&a, &b]).unwrap();
        let (code, _) = build_code(&p, &[&m]).unwrap();
        let specs: Vec<_> = code
            .instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Gate { spec, .. } => Some(*spec),
                _ => None,
            })
            .collect();
        assert_eq!(specs, vec![H, T, X, Z]);
    }
}
