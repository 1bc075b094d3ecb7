//! Two-level linear IR and its text format.
//!
//! `Code` level is what the runtime generates: arbitrary multi-controlled
//! gates plus classical registers, labels and branches. `Assembly` is the
//! lowered level where the only two-qubit gate is CX.
//!
//! Text format (one instruction per line, `#` line comments):
//!
//! ```text
//! alloc q0
//! gate h q0
//! gate rz(7.8539816339744828e-1) q0
//! gate x ctrl q0, q1
//! measure q0, q1 -> i0
//! set i1 = -5
//! bin add i2, i0, i1
//! label @L0
//! br i2 @L1 @L2
//! jmp @L0
//! out i2
//! free q0
//! ```
//!
//! Qubits are `q<uint>`, registers `i<uint>`, labels `@ident`; angles print
//! with 17 significant digits so serialization is byte-deterministic and
//! parse∘serialize is the identity.

use crate::error::{Error, Result};
use crate::gate::GateSpec;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOpKind {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOpKind {
    pub fn mnemonic(self) -> &'static str {
        use BinOpKind::*;
        match self {
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            Mod => "mod",
            Shl => "shl",
            Shr => "shr",
            And => "and",
            Or => "or",
            Xor => "xor",
            Eq => "eq",
            Ne => "ne",
            Lt => "lt",
            Le => "le",
            Gt => "gt",
            Ge => "ge",
        }
    }

    fn from_mnemonic(s: &str) -> Option<BinOpKind> {
        use BinOpKind::*;
        Some(match s {
            "add" => Add,
            "sub" => Sub,
            "mul" => Mul,
            "div" => Div,
            "mod" => Mod,
            "shl" => Shl,
            "shr" => Shr,
            "and" => And,
            "or" => Or,
            "xor" => Xor,
            "eq" => Eq,
            "ne" => Ne,
            "lt" => Lt,
            "le" => Le,
            "gt" => Gt,
            "ge" => Ge,
            _ => return None,
        })
    }

    /// Two's-complement 64-bit semantics; comparisons yield 0/1; shift
    /// counts are masked to 0..63; division and modulo by zero error.
    pub fn apply(self, a: i64, b: i64) -> Result<i64> {
        use BinOpKind::*;
        Ok(match self {
            Add => a.wrapping_add(b),
            Sub => a.wrapping_sub(b),
            Mul => a.wrapping_mul(b),
            Div => {
                if b == 0 {
                    return Err(Error::DivisionByZero);
                }
                a.wrapping_div(b)
            }
            Mod => {
                if b == 0 {
                    return Err(Error::DivisionByZero);
                }
                a.wrapping_rem(b)
            }
            Shl => a.wrapping_shl(b as u32),
            Shr => a.wrapping_shr(b as u32),
            And => a & b,
            Or => a | b,
            Xor => a ^ b,
            Eq => (a == b) as i64,
            Ne => (a != b) as i64,
            Lt => (a < b) as i64,
            Le => (a <= b) as i64,
            Gt => (a > b) as i64,
            Ge => (a >= b) as i64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Alloc { qubit: usize },
    Free { qubit: usize },
    Gate { spec: GateSpec, controls: Vec<usize>, target: usize },
    Measure { qubits: Vec<usize>, reg: usize },
    Set { reg: usize, value: i64 },
    Bin { op: BinOpKind, dst: usize, lhs: usize, rhs: usize },
    Label { name: String },
    Branch { reg: usize, on_true: String, on_false: String },
    Jump { target: String },
    Out { reg: usize },
}

impl Instruction {
    /// Qubits this instruction touches.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Alloc { qubit } | Instruction::Free { qubit } => vec![*qubit],
            Instruction::Gate { controls, target, .. } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Instruction::Measure { qubits, .. } => qubits.clone(),
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrLevel {
    Code,
    Assembly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCode {
    pub instructions: Vec<Instruction>,
    pub qubit_count: usize,
    pub reg_count: usize,
    pub level: IrLevel,
}

impl QuantumCode {
    pub fn new(instructions: Vec<Instruction>, level: IrLevel) -> QuantumCode {
        let mut code = QuantumCode { instructions, qubit_count: 0, reg_count: 0, level };
        code.recount();
        code
    }

    /// Recompute qubit_count and reg_count from the instruction list.
    pub fn recount(&mut self) {
        let mut qmax = 0usize;
        let mut rmax = 0usize;
        for ins in &self.instructions {
            for q in ins.qubits() {
                qmax = qmax.max(q + 1);
            }
            match ins {
                Instruction::Measure { reg, .. }
                | Instruction::Set { reg, .. }
                | Instruction::Out { reg }
                | Instruction::Branch { reg, .. } => rmax = rmax.max(reg + 1),
                Instruction::Bin { dst, lhs, rhs, .. } => {
                    rmax = rmax.max(dst.max(lhs).max(rhs) + 1)
                }
                _ => {}
            }
        }
        self.qubit_count = qmax;
        self.reg_count = rmax;
    }

    /// Check label uniqueness/definedness, the assembly-level gate
    /// restriction, and that registers are written before read on every
    /// path through the control-flow graph.
    pub fn validate(&self) -> Result<()> {
        self.validate_labels()?;
        if self.level == IrLevel::Assembly {
            for ins in &self.instructions {
                if let Instruction::Gate { spec, controls, .. } = ins {
                    if controls.len() > 1 {
                        return Err(Error::LevelViolation(format!(
                            "gate with {} controls",
                            controls.len()
                        )));
                    }
                    if controls.len() == 1 && *spec != GateSpec::X {
                        return Err(Error::LevelViolation(format!(
                            "controlled {} (only cx is allowed)",
                            spec.mnemonic()
                        )));
                    }
                }
            }
        }
        self.validate_registers()
    }

    fn validate_labels(&self) -> Result<()> {
        let mut defined = HashSet::new();
        for ins in &self.instructions {
            if let Instruction::Label { name } = ins {
                if !defined.insert(name.clone()) {
                    return Err(Error::DuplicateLabel(name.clone()));
                }
            }
        }
        for ins in &self.instructions {
            let targets: Vec<&String> = match ins {
                Instruction::Branch { on_true, on_false, .. } => vec![on_true, on_false],
                Instruction::Jump { target } => vec![target],
                _ => vec![],
            };
            for t in targets {
                if !defined.contains(t) {
                    return Err(Error::UndefinedLabel(t.clone()));
                }
            }
        }
        Ok(())
    }

    /// Forward must-be-written dataflow over basic blocks.
    fn validate_registers(&self) -> Result<()> {
        let n = self.instructions.len();
        if n == 0 {
            return Ok(());
        }
        // Block leaders: 0, label positions, and successors of branch/jump.
        let mut leader = vec![false; n];
        leader[0] = true;
        let mut label_at = HashMap::new();
        for (i, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instruction::Label { name } => {
                    leader[i] = true;
                    label_at.insert(name.clone(), i);
                }
                Instruction::Branch { .. } | Instruction::Jump { .. } => {
                    if i + 1 < n {
                        leader[i + 1] = true;
                    }
                }
                _ => {}
            }
        }
        let starts: Vec<usize> = (0..n).filter(|&i| leader[i]).collect();
        let block_of = |i: usize| starts.partition_point(|&s| s <= i) - 1;
        let nb = starts.len();
        let all: HashSet<usize> = (0..self.reg_count).collect();
        // written[b]: registers definitely written at block entry.
        let mut at_entry: Vec<Option<HashSet<usize>>> = vec![None; nb];
        at_entry[0] = Some(HashSet::new());
        let mut changed = true;
        while changed {
            changed = false;
            for b in 0..nb {
                let Some(entry) = at_entry[b].clone() else { continue };
                let end = if b + 1 < nb { starts[b + 1] } else { n };
                let mut cur = entry;
                let mut succs: Vec<usize> = Vec::new();
                let mut fallthrough = true;
                for i in starts[b]..end {
                    match &self.instructions[i] {
                        Instruction::Measure { reg, .. } | Instruction::Set { reg, .. } => {
                            cur.insert(*reg);
                        }
                        Instruction::Bin { dst, lhs, rhs, .. } => {
                            if !cur.contains(lhs) {
                                return Err(Error::RegisterUnwritten(*lhs));
                            }
                            if !cur.contains(rhs) {
                                return Err(Error::RegisterUnwritten(*rhs));
                            }
                            cur.insert(*dst);
                        }
                        Instruction::Out { reg } => {
                            if !cur.contains(reg) {
                                return Err(Error::RegisterUnwritten(*reg));
                            }
                        }
                        Instruction::Branch { reg, on_true, on_false } => {
                            if !cur.contains(reg) {
                                return Err(Error::RegisterUnwritten(*reg));
                            }
                            succs.push(block_of(label_at[on_true]));
                            succs.push(block_of(label_at[on_false]));
                            fallthrough = false;
                        }
                        Instruction::Jump { target } => {
                            succs.push(block_of(label_at[target]));
                            fallthrough = false;
                        }
                        _ => {}
                    }
                }
                if fallthrough && b + 1 < nb {
                    succs.push(b + 1);
                }
                for s in succs {
                    let merged = match &at_entry[s] {
                        None => cur.clone(),
                        Some(prev) => prev.intersection(&cur).copied().collect(),
                    };
                    if at_entry[s].as_ref() != Some(&merged) {
                        at_entry[s] = Some(merged);
                        changed = true;
                    }
                }
            }
        }
        let _ = all;
        Ok(())
    }
}

/// Deterministic, byte-for-byte stable text form.
pub fn serialize(code: &QuantumCode) -> String {
    let mut out = String::new();
    for ins in &code.instructions {
        match ins {
            Instruction::Alloc { qubit } => {
                let _ = writeln!(out, "alloc q{qubit}");
            }
            Instruction::Free { qubit } => {
                let _ = writeln!(out, "free q{qubit}");
            }
            Instruction::Gate { spec, controls, target } => {
                if controls.is_empty() {
                    let _ = writeln!(out, "gate {spec} q{target}");
                } else {
                    let cs: Vec<String> = controls.iter().map(|c| format!("q{c}")).collect();
                    let _ = writeln!(out, "gate {spec} ctrl {}, q{target}", cs.join(", "));
                }
            }
            Instruction::Measure { qubits, reg } => {
                let qs: Vec<String> = qubits.iter().map(|q| format!("q{q}")).collect();
                let _ = writeln!(out, "measure {} -> i{reg}", qs.join(", "));
            }
            Instruction::Set { reg, value } => {
                let _ = writeln!(out, "set i{reg} = {value}");
            }
            Instruction::Bin { op, dst, lhs, rhs } => {
                let _ = writeln!(out, "bin {} i{dst}, i{lhs}, i{rhs}", op.mnemonic());
            }
            Instruction::Label { name } => {
                let _ = writeln!(out, "label @{name}");
            }
            Instruction::Branch { reg, on_true, on_false } => {
                let _ = writeln!(out, "br i{reg} @{on_true} @{on_false}");
            }
            Instruction::Jump { target } => {
                let _ = writeln!(out, "jmp @{target}");
            }
            Instruction::Out { reg } => {
                let _ = writeln!(out, "out i{reg}");
            }
        }
    }
    out
}

pub fn parse(text: &str) -> Result<QuantumCode> {
    let mut instructions = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let s = stripped.trim();
        if s.is_empty() {
            continue;
        }
        instructions.push(parse_line(s, line)?);
    }
    let mut code = QuantumCode::new(instructions, IrLevel::Code);
    code.validate_labels()?;
    // Infer the tightest level the program satisfies.
    let assembly_ok = code.instructions.iter().all(|ins| match ins {
        Instruction::Gate { spec, controls, .. } => {
            controls.is_empty() || (controls.len() == 1 && *spec == GateSpec::X)
        }
        _ => true,
    });
    if assembly_ok {
        code.level = IrLevel::Assembly;
    }
    Ok(code)
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

fn parse_qubit(tok: &str, line: usize) -> Result<usize> {
    tok.strip_prefix('q')
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| syntax(line, format!("expected qubit, got `{tok}`")))
}

fn parse_reg(tok: &str, line: usize) -> Result<usize> {
    tok.strip_prefix('i')
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| syntax(line, format!("expected register, got `{tok}`")))
}

fn parse_label(tok: &str, line: usize) -> Result<String> {
    let name = tok
        .strip_prefix('@')
        .ok_or_else(|| syntax(line, format!("expected label, got `{tok}`")))?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax(line, format!("invalid label name `{tok}`")));
    }
    Ok(name.to_string())
}

fn parse_gate_spec(tok: &str, line: usize) -> Result<GateSpec> {
    let (name, param) = match tok.find('(') {
        Some(i) => {
            let inner = tok[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| syntax(line, "missing `)` in gate parameter"))?;
            let v: f64 = inner
                .parse()
                .map_err(|_| syntax(line, format!("bad angle `{inner}`")))?;
            (&tok[..i], Some(v))
        }
        None => (tok, None),
    };
    match (name, param) {
        ("x", None) => Ok(GateSpec::X),
        ("y", None) => Ok(GateSpec::Y),
        ("z", None) => Ok(GateSpec::Z),
        ("h", None) => Ok(GateSpec::H),
        ("s", None) => Ok(GateSpec::S),
        ("sdg", None) => Ok(GateSpec::Sdg),
        ("t", None) => Ok(GateSpec::T),
        ("tdg", None) => Ok(GateSpec::Tdg),
        ("p", Some(v)) => Ok(GateSpec::Phase(v)),
        ("rx", Some(v)) => Ok(GateSpec::Rx(v)),
        ("ry", Some(v)) => Ok(GateSpec::Ry(v)),
        ("rz", Some(v)) => Ok(GateSpec::Rz(v)),
        _ => Err(Error::UnknownMnemonic(name.to_string())),
    }
}

fn parse_line(s: &str, line: usize) -> Result<Instruction> {
    let (mnemonic, rest) = match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => (s, ""),
    };
    let args = |rest: &str| -> Vec<String> {
        rest.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
    };
    match mnemonic {
        "alloc" => Ok(Instruction::Alloc { qubit: parse_qubit(rest, line)? }),
        "free" => Ok(Instruction::Free { qubit: parse_qubit(rest, line)? }),
        "gate" => {
            let (spec_tok, operands) = match rest.find(char::is_whitespace) {
                Some(i) => (&rest[..i], rest[i..].trim()),
                None => return Err(syntax(line, "gate needs a target qubit")),
            };
            let spec = parse_gate_spec(spec_tok, line)?;
            if let Some(ops) = operands.strip_prefix("ctrl ") {
                let toks = args(ops);
                if toks.len() < 2 {
                    return Err(syntax(line, "controlled gate needs controls and a target"));
                }
                let mut qs = Vec::new();
                for t in &toks {
                    qs.push(parse_qubit(t, line)?);
                }
                let target = qs.pop().unwrap();
                Ok(Instruction::Gate { spec, controls: qs, target })
            } else {
                Ok(Instruction::Gate { spec, controls: vec![], target: parse_qubit(operands, line)? })
            }
        }
        "measure" => {
            let (qpart, rpart) = rest
                .split_once("->")
                .ok_or_else(|| syntax(line, "measure needs `-> i<reg>`"))?;
            let mut qubits = Vec::new();
            for t in args(qpart) {
                qubits.push(parse_qubit(&t, line)?);
            }
            if qubits.is_empty() {
                return Err(syntax(line, "measure needs at least one qubit"));
            }
            Ok(Instruction::Measure { qubits, reg: parse_reg(rpart.trim(), line)? })
        }
        "set" => {
            let (rpart, vpart) = rest
                .split_once('=')
                .ok_or_else(|| syntax(line, "set needs `= <int>`"))?;
            let value: i64 = vpart
                .trim()
                .parse()
                .map_err(|_| syntax(line, format!("bad integer `{}`", vpart.trim())))?;
            Ok(Instruction::Set { reg: parse_reg(rpart.trim(), line)?, value })
        }
        "bin" => {
            let (op_tok, operands) = match rest.find(char::is_whitespace) {
                Some(i) => (&rest[..i], rest[i..].trim()),
                None => return Err(syntax(line, "bin needs operands")),
            };
            let op = BinOpKind::from_mnemonic(op_tok)
                .ok_or_else(|| Error::UnknownMnemonic(op_tok.to_string()))?;
            let toks = args(operands);
            if toks.len() != 3 {
                return Err(syntax(line, "bin needs `dst, lhs, rhs`"));
            }
            Ok(Instruction::Bin {
                op,
                dst: parse_reg(&toks[0], line)?,
                lhs: parse_reg(&toks[1], line)?,
                rhs: parse_reg(&toks[2], line)?,
            })
        }
        "label" => Ok(Instruction::Label { name: parse_label(rest, line)? }),
        "br" => {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(syntax(line, "br needs `i<reg> @true @false`"));
            }
            Ok(Instruction::Branch {
                reg: parse_reg(toks[0], line)?,
                on_true: parse_label(toks[1], line)?,
                on_false: parse_label(toks[2], line)?,
            })
        }
        "jmp" => Ok(Instruction::Jump { target: parse_label(rest, line)? }),
        "out" => Ok(Instruction::Out { reg: parse_reg(rest, line)? }),
        other => Err(Error::UnknownMnemonic(other.to_string())),
    }
}
