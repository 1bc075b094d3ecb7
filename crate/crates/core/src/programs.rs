//! Ready-made example programs built through the recording runtime.

use crate::error::Result;
use crate::gate::GateSpec::{H, X, Z};
use crate::ir::BinOpKind;
use crate::process::{Future, Process, Qubit};

/// Bell-pair builder with classical flags, mirroring a two-qubit
/// entangling routine whose `if`s resolve at recording time.
fn bell_pair(p: &mut Process, aux0: i64, aux1: i64) -> Result<(Qubit, Qubit)> {
    let q0 = p.alloc()?;
    let q1 = p.alloc()?;
    let a0 = p.lift_int(aux0);
    p.if_then_else(&a0, |p| p.gate(X, &q0), |_| Ok(()))?;
    let a1 = p.lift_int(aux1);
    p.if_then_else(&a1, |p| p.gate(X, &q1), |_| Ok(()))?;
    p.gate(H, &q0)?;
    p.ctrl(&[&q0], |p| p.gate(X, &q1))?;
    Ok((q0, q1))
}

/// Bell state measured into one two-bit future; outcomes are 0 or 3.
pub fn bell(seed: u64) -> (Process, Future) {
    bell_flags(seed, 0, 0)
}

pub fn bell_flags(seed: u64, aux0: i64, aux1: i64) -> (Process, Future) {
    let mut p = Process::new(seed);
    let (q0, q1) = bell_pair(&mut p, aux0, aux1).expect("recording cannot fail here");
    let m = p.measure(&[&q0, &q1]).expect("recording cannot fail here");
    (p, m)
}

/// Teleportation of H|0⟩ with the measurement-conditioned corrections on
/// the quantum side; demands the final target measurement.
pub fn teleport(seed: u64) -> (Process, Future) {
    let mut p = Process::new(seed);
    let a = p.alloc().expect("alloc");
    p.gate(H, &a).expect("input prep");
    let (m0, m1, target) = teleport_channel(&mut p, a).expect("recording cannot fail here");
    let _ = (m0, m1);
    let m = p.measure(&[&target]).expect("final measure");
    (p, m)
}

/// Teleportation of an arbitrary Bloch state, stopping after the
/// corrections so the target state can be inspected before measurement.
/// Returns the two intermediate measurement futures.
pub fn teleport_bloch(seed: u64, theta: f64, phi: f64) -> (Process, Future, Future) {
    let mut p = Process::new(seed);
    let a = p.alloc().expect("alloc");
    p.prepare_bloch(theta, phi, &a).expect("input prep");
    let (m0, m1, _target) = teleport_channel(&mut p, a).expect("recording cannot fail here");
    (p, m0, m1)
}

/// The teleport body: Bell pair, entangle, measure, conditioned Z and X.
fn teleport_channel(p: &mut Process, a: Qubit) -> Result<(Future, Future, Qubit)> {
    let (q0, q1) = bell_pair(p, 0, 0)?;
    p.ctrl(&[&a], |p| p.gate(X, &q0))?;
    p.gate(H, &a)?;
    let m0 = p.measure(&[&a])?;
    let m1 = p.measure(&[&q0])?;
    p.if_then_else(&m0, |p| p.gate(Z, &q1), |_| Ok(()))?;
    p.if_then_else(&m1, |p| p.gate(X, &q1), |_| Ok(()))?;
    Ok((m0, m1, q1))
}

/// Three-qubit Grover search for |111⟩: two iterations with a native
/// doubly controlled Z oracle. Success probability ≈ 0.945.
pub fn grover3(seed: u64) -> (Process, Future) {
    let mut p = Process::new(seed);
    let q0 = p.alloc().expect("alloc");
    let q1 = p.alloc().expect("alloc");
    let q2 = p.alloc().expect("alloc");
    let all = [&q0, &q1, &q2];
    let build = |p: &mut Process| -> Result<()> {
        for q in all {
            p.gate(H, q)?;
        }
        for _ in 0..2 {
            // Oracle: flip the phase of |111⟩.
            p.ctrl(&[&q0, &q1], |p| p.gate(Z, &q2))?;
            // Diffusion about the mean.
            for q in all {
                p.gate(H, q)?;
            }
            for q in all {
                p.gate(X, q)?;
            }
            p.ctrl(&[&q0, &q1], |p| p.gate(Z, &q2))?;
            for q in all {
                p.gate(X, q)?;
            }
            for q in all {
                p.gate(H, q)?;
            }
        }
        Ok(())
    };
    build(&mut p).expect("recording cannot fail here");
    let m = p.measure(&[&q0, &q1, &q2]).expect("measure");
    (p, m)
}

/// Quantum-side repeat-until-one coin flip: each iteration allocates a
/// fresh qubit, flips it with H, measures, and loops while the result is
/// 0. The returned future is the loop measurement; its register counts
/// one write per iteration.
pub fn coinloop(seed: u64) -> (Process, Future) {
    let mut p = Process::new(seed);
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
    .expect("recording cannot fail here");
    let m = measured.expect("cond block ran");
    (p, m)
}

/// Look up an example by CLI name.
pub fn by_name(name: &str, seed: u64) -> Option<(Process, Future)> {
    match name {
        "bell" => Some(bell(seed)),
        "teleport" => Some(teleport(seed)),
        "grover3" => Some(grover3(seed)),
        "coinloop" => Some(coinloop(seed)),
        _ => None,
    }
}
