//! Runtime for dynamic classical–quantum data interaction.
//!
//! Programs are recorded through a [`Process`]: gate applications,
//! controlled/adjoint scopes, measurements-as-futures and classical
//! control flow build a runtime AST. When a future's value is demanded,
//! the dependency cone is lowered to quantum code, compiled, and executed
//! on a deterministic state-vector simulator.
//!
//! Modules:
//! - [`process`]: recording runtime (the shared-library role)
//! - [`ir`]: two-level linear IR with text serialization
//! - [`codegen`]: lazy cone-based code generation
//! - [`compiler`]: architecture-independent passes, decomposition, routing
//! - [`sim`]: dense state-vector simulator with classical branching
//! - [`programs`]: ready-made example programs

pub mod codegen;
pub mod compiler;
pub mod error;
pub mod gate;
pub mod graph;
pub mod ir;
pub mod process;
pub mod programs;
pub mod sim;

pub use error::{Error, Result};
pub use gate::GateSpec;
pub use graph::CouplingGraph;
pub use ir::{BinOpKind, Instruction, IrLevel, QuantumCode};
pub use process::{Future, Process, ProcessState, Qubit};
pub use sim::{RunOutcome, SimConfig, SimState};
