//! Gate set shared by the runtime, the IR and the simulator.

use num_complex::Complex64;
use std::fmt;

/// A single-qubit gate, possibly parameterized by an angle in radians.
///
/// Controls are not part of the gate itself; they are attached by the
/// recording runtime (control scopes) or by the IR instruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    /// Phase gate diag(1, e^{iλ}).
    Phase(f64),
    Rx(f64),
    Ry(f64),
    Rz(f64),
}

impl GateSpec {
    /// Exact inverse of this gate.
    pub fn inverse(self) -> GateSpec {
        use GateSpec::*;
        match self {
            X | Y | Z | H => self,
            S => Sdg,
            Sdg => S,
            T => Tdg,
            Tdg => T,
            Phase(l) => Phase(-l),
            Rx(t) => Rx(-t),
            Ry(t) => Ry(-t),
            Rz(t) => Rz(-t),
        }
    }

    /// 2x2 unitary matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        use GateSpec::*;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            X => [[zero, one], [one, zero]],
            Y => [[zero, -i], [i, zero]],
            Z => [[one, zero], [zero, -one]],
            H => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            S => [[one, zero], [zero, i]],
            Sdg => [[one, zero], [zero, -i]],
            T => [[one, zero], [zero, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
            Tdg => [[one, zero], [zero, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
            Phase(l) => [[one, zero], [zero, Complex64::from_polar(1.0, l)]],
            Rx(t) => {
                let c = Complex64::new((t / 2.0).cos(), 0.0);
                let s = Complex64::new(0.0, -(t / 2.0).sin());
                [[c, s], [s, c]]
            }
            Ry(t) => {
                let c = Complex64::new((t / 2.0).cos(), 0.0);
                let s = Complex64::new((t / 2.0).sin(), 0.0);
                [[c, -s], [s, c]]
            }
            Rz(t) => [
                [Complex64::from_polar(1.0, -t / 2.0), zero],
                [zero, Complex64::from_polar(1.0, t / 2.0)],
            ],
        }
    }

    /// Lowercase mnemonic used by the text format.
    pub fn mnemonic(self) -> &'static str {
        use GateSpec::*;
        match self {
            X => "x",
            Y => "y",
            Z => "z",
            H => "h",
            S => "s",
            Sdg => "sdg",
            T => "t",
            Tdg => "tdg",
            Phase(_) => "p",
            Rx(_) => "rx",
            Ry(_) => "ry",
            Rz(_) => "rz",
        }
    }

    /// Angle parameter, if the gate has one.
    pub fn param(self) -> Option<f64> {
        use GateSpec::*;
        match self {
            Phase(l) | Rx(l) | Ry(l) | Rz(l) => Some(l),
            _ => None,
        }
    }

    /// Rotation axis identifier for same-axis merging, if mergeable.
    pub fn rotation_axis(self) -> Option<RotationAxis> {
        use GateSpec::*;
        match self {
            Phase(_) => Some(RotationAxis::PhaseDiag),
            Rx(_) => Some(RotationAxis::X),
            Ry(_) => Some(RotationAxis::Y),
            Rz(_) => Some(RotationAxis::Z),
            _ => None,
        }
    }

    pub fn with_angle(axis: RotationAxis, angle: f64) -> GateSpec {
        match axis {
            RotationAxis::PhaseDiag => GateSpec::Phase(angle),
            RotationAxis::X => GateSpec::Rx(angle),
            RotationAxis::Y => GateSpec::Ry(angle),
            RotationAxis::Z => GateSpec::Rz(angle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    Z,
    /// P(λ) family: diagonal phase, period 2π.
    PhaseDiag,
}

impl RotationAxis {
    /// Angle period after which the gate is exactly the identity.
    /// R gates need 4π (2π gives −I); P needs 2π.
    pub fn identity_period(self) -> f64 {
        match self {
            RotationAxis::PhaseDiag => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        }
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            // 17 significant digits round-trips any f64 exactly.
            Some(p) => write!(f, "{}({:.16e})", self.mnemonic(), p),
            None => write!(f, "{}", self.mnemonic()),
        }
    }
}
