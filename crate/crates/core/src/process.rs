//! Recording runtime: the shared-library side of the architecture.
//!
//! A `Process` owns one independent quantum execution. API calls do not
//! touch any simulator; they append nodes to a runtime AST. Quantum code
//! is generated lazily, the first time a future's value is demanded, and
//! the process then executes exactly once.

use crate::codegen;
use crate::error::{Error, Result};
use crate::gate::GateSpec;
use crate::ir::BinOpKind;
use crate::sim::{self, RunOutcome, SimConfig};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_PROCESS_ID: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProcessId(u64);

pub type NodeId = usize;

/// Runtime AST node. Quantum nodes carry per-qubit predecessor links so
/// each qubit's history forms a chain ending at the process tail map.
#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))] // prev links are walked by tests only
pub(crate) enum Node {
    Alloc { qubit: usize },
    Free { qubit: usize, prev: Option<NodeId> },
    Gate { spec: GateSpec, controls: Vec<usize>, target: usize, prev: Vec<(usize, Option<NodeId>)> },
    Measure { qubits: Vec<usize>, prev: Vec<(usize, Option<NodeId>)> },
    IntLiteral { value: i64 },
    BinOp { op: BinOpKind, lhs: NodeId, rhs: NodeId },
    IfBegin { cond: NodeId },
    IfElse,
    IfEnd,
    WhileBegin,
    WhileTest { cond: NodeId },
    WhileEnd,
}

impl Node {
    pub(crate) fn touched_qubits(&self) -> Vec<usize> {
        match self {
            Node::Alloc { qubit } | Node::Free { qubit, .. } => vec![*qubit],
            Node::Gate { controls, target, .. } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Node::Measure { qubits, .. } => qubits.clone(),
            _ => vec![],
        }
    }

    #[cfg(test)]
    fn prev_for(&self, qubit: usize) -> Option<NodeId> {
        match self {
            Node::Free { qubit: q, prev } if *q == qubit => *prev,
            Node::Gate { prev, .. } | Node::Measure { prev, .. } => {
                prev.iter().find(|(q, _)| *q == qubit).and_then(|(_, p)| *p)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitStatus {
    Allocated,
    Measured,
    Freed,
}

/// Opaque handle to one qubit of one process.
///
/// Deliberately neither `Clone` nor `Copy`: qubit state cannot be copied,
/// so neither can the handle.
#[derive(Debug)]
pub struct Qubit {
    index: usize,
    process: ProcessId,
}

impl Qubit {
    pub fn index(&self) -> usize {
        self.index
    }
}

/// Handle to a classical value that may only exist after quantum
/// execution: a measurement result, a literal, or an expression of those.
#[derive(Debug, Clone)]
pub struct Future {
    pub(crate) node: NodeId,
    process: ProcessId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessState {
    Building,
    Executed,
}

pub struct Process {
    id: ProcessId,
    seed: u64,
    state: ProcessState,
    pub(crate) nodes: Vec<Node>,
    /// Recorded operations in program order.
    pub(crate) program: Vec<NodeId>,
    qubit_status: Vec<QubitStatus>,
    qubit_tails: Vec<Option<NodeId>>,
    ctrl_stack: Vec<Vec<usize>>,
    adj_depth: usize,
    flow_depth: usize,
    fulfilled: HashMap<NodeId, i64>,
    sim_config: SimConfig,
}

impl Process {
    pub fn new(seed: u64) -> Process {
        Process {
            id: ProcessId(NEXT_PROCESS_ID.fetch_add(1, Ordering::Relaxed)),
            seed,
            state: ProcessState::Building,
            nodes: Vec::new(),
            program: Vec::new(),
            qubit_status: Vec::new(),
            qubit_tails: Vec::new(),
            ctrl_stack: Vec::new(),
            adj_depth: 0,
            flow_depth: 0,
            fulfilled: HashMap::new(),
            sim_config: SimConfig::default(),
        }
    }

    pub fn id(&self) -> ProcessId {
        self.id
    }

    pub fn state(&self) -> ProcessState {
        self.state
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sim_config_mut(&mut self) -> &mut SimConfig {
        &mut self.sim_config
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_status.len()
    }

    fn check_building(&self) -> Result<()> {
        match self.state {
            ProcessState::Building => Ok(()),
            ProcessState::Executed => Err(Error::ProcessAlreadyExecuted),
        }
    }

    fn check_owned_allocated(&self, q: &Qubit) -> Result<usize> {
        if q.process != self.id {
            return Err(Error::ForeignQubit);
        }
        if self.qubit_status[q.index] != QubitStatus::Allocated {
            return Err(Error::QubitNotAllocated(q.index));
        }
        Ok(q.index)
    }

    fn check_owned_future(&self, f: &Future) -> Result<NodeId> {
        if f.process != self.id {
            return Err(Error::ForeignFuture);
        }
        Ok(f.node)
    }

    fn push_node(&mut self, node: Node) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(node);
        id
    }

    fn record(&mut self, node: Node) -> NodeId {
        let id = self.push_node(node);
        self.program.push(id);
        id
    }

    /// Allocate a fresh qubit in |0⟩.
    pub fn alloc(&mut self) -> Result<Qubit> {
        self.check_building()?;
        if self.adj_depth > 0 {
            return Err(Error::AllocInsideAdjoint);
        }
        let index = self.qubit_status.len();
        self.qubit_status.push(QubitStatus::Allocated);
        let id = self.record(Node::Alloc { qubit: index });
        self.qubit_tails.push(Some(id));
        Ok(Qubit { index, process: self.id })
    }

    /// Release a qubit. It must have been measured first.
    pub fn free(&mut self, q: &Qubit) -> Result<()> {
        self.check_building()?;
        if self.adj_depth > 0 {
            return Err(Error::NonUnitaryInAdjoint);
        }
        if q.process != self.id {
            return Err(Error::ForeignQubit);
        }
        match self.qubit_status[q.index] {
            QubitStatus::Allocated => return Err(Error::FreeUnmeasured(q.index)),
            QubitStatus::Freed => return Err(Error::DoubleFree(q.index)),
            QubitStatus::Measured => {}
        }
        let prev = self.qubit_tails[q.index];
        let id = self.record(Node::Free { qubit: q.index, prev });
        self.qubit_tails[q.index] = Some(id);
        self.qubit_status[q.index] = QubitStatus::Freed;
        Ok(())
    }

    fn active_controls(&self) -> Vec<usize> {
        self.ctrl_stack.iter().flatten().copied().collect()
    }

    /// Record a gate on `target`, controlled by every active control scope.
    /// Inside an adjoint scope the inverse is recorded and ordering is
    /// fixed up when the scope closes.
    pub fn gate(&mut self, spec: GateSpec, target: &Qubit) -> Result<()> {
        self.check_building()?;
        let t = self.check_owned_allocated(target)?;
        let controls = self.active_controls();
        if controls.contains(&t) {
            return Err(Error::TargetIsControl(t));
        }
        let spec = if self.adj_depth % 2 == 1 { spec.inverse() } else { spec };
        let mut prev = Vec::with_capacity(controls.len() + 1);
        for &q in controls.iter().chain(std::iter::once(&t)) {
            prev.push((q, self.qubit_tails[q]));
        }
        let id = self.record(Node::Gate { spec, controls: controls.clone(), target: t, prev });
        for &q in controls.iter().chain(std::iter::once(&t)) {
            self.qubit_tails[q] = Some(id);
        }
        Ok(())
    }

    /// Run `block` with the given qubits added to the active control set.
    /// Nested scopes union their controls onto a single recorded gate node.
    pub fn ctrl<F>(&mut self, controls: &[&Qubit], block: F) -> Result<()>
    where
        F: FnOnce(&mut Process) -> Result<()>,
    {
        self.check_building()?;
        let active = self.active_controls();
        let mut set = Vec::with_capacity(controls.len());
        for q in controls {
            let idx = self.check_owned_allocated(q)?;
            if active.contains(&idx) || set.contains(&idx) {
                return Err(Error::OverlappingControls(idx));
            }
            set.push(idx);
        }
        self.ctrl_stack.push(set);
        let result = block(self);
        self.ctrl_stack.pop();
        result
    }

    /// Run `block` and record its inverse: reversed gate order, each gate
    /// inverted. The block must be purely unitary.
    pub fn adj<F>(&mut self, block: F) -> Result<()>
    where
        F: FnOnce(&mut Process) -> Result<()>,
    {
        self.check_building()?;
        let start = self.program.len();
        let tails_snapshot = self.qubit_tails.clone();
        self.adj_depth += 1;
        let result = block(self);
        self.adj_depth -= 1;
        result?;
        self.program[start..].reverse();
        // Predecessor links recorded in forward order are stale; rebuild
        // them for the reversed slice.
        self.qubit_tails = tails_snapshot;
        for i in start..self.program.len() {
            let id = self.program[i];
            let touched = self.nodes[id].touched_qubits();
            if let Node::Gate { prev, .. } = &mut self.nodes[id] {
                prev.clear();
                for &q in &touched {
                    prev.push((q, self.qubit_tails[q]));
                }
            }
            for &q in &touched {
                self.qubit_tails[q] = Some(id);
            }
        }
        Ok(())
    }

    /// Measure an ordered list of qubits into one future. `qs[0]` becomes
    /// the most significant bit. Measurement is terminal per qubit.
    pub fn measure(&mut self, qs: &[&Qubit]) -> Result<Future> {
        self.check_building()?;
        if !self.ctrl_stack.is_empty() {
            return Err(Error::MeasureInsideCtrl);
        }
        if self.adj_depth > 0 {
            return Err(Error::MeasureInsideAdjoint);
        }
        if qs.is_empty() || qs.len() > 63 {
            return Err(Error::TooManyQubits(qs.len()));
        }
        let mut indices = Vec::with_capacity(qs.len());
        let mut prev = Vec::with_capacity(qs.len());
        for q in qs {
            let idx = self.check_owned_allocated(q)?;
            if indices.contains(&idx) {
                return Err(Error::QubitNotAllocated(idx));
            }
            indices.push(idx);
            prev.push((idx, self.qubit_tails[idx]));
        }
        let id = self.record(Node::Measure { qubits: indices.clone(), prev });
        for idx in indices {
            self.qubit_tails[idx] = Some(id);
            self.qubit_status[idx] = QubitStatus::Measured;
        }
        Ok(Future { node: id, process: self.id })
    }

    /// Wrap a classical constant as a future.
    pub fn lift_int(&mut self, value: i64) -> Future {
        let node = Node::IntLiteral { value };
        let id = if self.state == ProcessState::Building {
            self.record(node)
        } else {
            self.push_node(node)
        };
        Future { node: id, process: self.id }
    }

    /// Combine two futures. Arithmetic wraps at 64 bits; comparisons yield
    /// 0/1; division by zero is reported at execution time.
    pub fn bin_op(&mut self, op: BinOpKind, a: &Future, b: &Future) -> Result<Future> {
        if a.process != self.id || b.process != self.id {
            return Err(Error::CrossProcessOperands);
        }
        if self.state == ProcessState::Executed {
            // Allowed only when both operands already have known values.
            for f in [a, b] {
                if self.classical_value(f.node)?.is_none() {
                    return Err(Error::ProcessAlreadyExecuted);
                }
            }
            let id = self.push_node(Node::BinOp { op, lhs: a.node, rhs: b.node });
            return Ok(Future { node: id, process: self.id });
        }
        let id = self.record(Node::BinOp { op, lhs: a.node, rhs: b.node });
        Ok(Future { node: id, process: self.id })
    }

    /// Does the node's expression subtree contain a measurement?
    /// This is the classical/quantum branch-placement rule: conditions
    /// without measurements are resolved while recording.
    pub(crate) fn subtree_has_measure(&self, node: NodeId) -> bool {
        match &self.nodes[node] {
            Node::Measure { .. } => true,
            Node::BinOp { lhs, rhs, .. } => {
                self.subtree_has_measure(*lhs) || self.subtree_has_measure(*rhs)
            }
            _ => false,
        }
    }

    /// Evaluate a classical expression subtree, using fulfilled
    /// measurement values where available. None if a needed measurement
    /// is still unfulfilled.
    fn classical_value(&self, node: NodeId) -> Result<Option<i64>> {
        match &self.nodes[node] {
            Node::IntLiteral { value } => Ok(Some(*value)),
            Node::Measure { .. } => Ok(self.fulfilled.get(&node).copied()),
            Node::BinOp { op, lhs, rhs } => {
                match (self.classical_value(*lhs)?, self.classical_value(*rhs)?) {
                    (Some(a), Some(b)) => Ok(Some(op.apply(a, b)?)),
                    _ => Ok(None),
                }
            }
            _ => Ok(None),
        }
    }

    /// Conditional execution. If the condition is classical (no
    /// measurement in its subtree) it is resolved now and only the chosen
    /// block is recorded; otherwise both blocks are recorded for
    /// quantum-side branching.
    pub fn if_then_else<FT, FE>(&mut self, cond: &Future, then_block: FT, else_block: FE) -> Result<()>
    where
        FT: FnOnce(&mut Process) -> Result<()>,
        FE: FnOnce(&mut Process) -> Result<()>,
    {
        self.check_building()?;
        let cond_node = self.check_owned_future(cond)?;
        if self.adj_depth > 0 {
            return Err(Error::NonUnitaryInAdjoint);
        }
        if !self.subtree_has_measure(cond_node) {
            let v = self
                .classical_value(cond_node)?
                .expect("measurement-free subtree always evaluates");
            return if v != 0 { then_block(self) } else { else_block(self) };
        }
        self.record(Node::IfBegin { cond: cond_node });
        self.flow_depth += 1;
        let r = then_block(self);
        if r.is_ok() {
            self.record(Node::IfElse);
        }
        let r = r.and_then(|_| else_block(self));
        if r.is_ok() {
            self.record(Node::IfEnd);
        }
        self.flow_depth -= 1;
        r
    }

    /// Quantum-side loop. The condition block must produce a future that
    /// depends on a measurement; a measurement-free condition means the
    /// host program should have looped classically instead.
    pub fn while_loop<FC, FB>(&mut self, cond_block: FC, body_block: FB) -> Result<()>
    where
        FC: FnOnce(&mut Process) -> Result<Future>,
        FB: FnOnce(&mut Process) -> Result<()>,
    {
        self.check_building()?;
        if self.adj_depth > 0 {
            return Err(Error::NonUnitaryInAdjoint);
        }
        let start = self.program.len();
        self.record(Node::WhileBegin);
        self.flow_depth += 1;
        let result = (|| -> Result<()> {
            let cond = cond_block(self)?;
            let cond_node = self.check_owned_future(&cond)?;
            if !self.subtree_has_measure(cond_node) {
                return Err(Error::ClassicalConditionLoop);
            }
            self.record(Node::WhileTest { cond: cond_node });
            body_block(self)?;
            self.record(Node::WhileEnd);
            Ok(())
        })();
        self.flow_depth -= 1;
        if result.is_err() {
            self.program.truncate(start);
        }
        result
    }

    /// Record the single-qubit state preparation cos(θ/2)|0⟩ +
    /// e^{iφ}sin(θ/2)|1⟩ on a fresh qubit: RY(θ) then RZ(φ).
    pub fn prepare_bloch(&mut self, theta: f64, phi: f64, q: &Qubit) -> Result<()> {
        self.gate(GateSpec::Ry(theta), q)?;
        self.gate(GateSpec::Rz(phi), q)
    }

    /// Generate, run and fulfill everything in the dependency cone of the
    /// demanded futures. Single-shot: the process transitions to
    /// Executed and rejects further mutation.
    pub fn execute(&mut self, demanded: &[&Future]) -> Result<RunOutcome> {
        self.check_building()?;
        if !self.ctrl_stack.is_empty() || self.adj_depth > 0 || self.flow_depth > 0 {
            return Err(Error::OpenScope);
        }
        let demand_nodes = demanded
            .iter()
            .map(|f| self.check_owned_future(f))
            .collect::<Result<Vec<_>>>()?;
        let (code, reg_map) = codegen::build_code_from_nodes(self, &demand_nodes)?;
        let outcome = sim::run_with(&code, self.seed, &self.sim_config)?;
        for (node, reg) in reg_map {
            if let Some(v) = outcome.regs[reg] {
                self.fulfilled.insert(node, v);
            }
        }
        self.state = ProcessState::Executed;
        Ok(outcome)
    }

    /// Force a future's value. Classically resolvable futures return
    /// without any quantum execution; otherwise the process executes
    /// exactly once and every future in the executed cone is fulfilled.
    pub fn value(&mut self, f: &Future) -> Result<i64> {
        let node = self.check_owned_future(f)?;
        if let Some(v) = self.classical_value(node)? {
            return Ok(v);
        }
        if self.state == ProcessState::Executed {
            return Err(Error::FutureUnfulfilled);
        }
        self.execute(&[f])?;
        self.classical_value(node)?.ok_or(Error::FutureUnfulfilled)
    }
}
