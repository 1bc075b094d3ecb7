//! Error type shared by the runtime, IR, compiler and simulator.
//!
//! Every variant carries a stable machine-readable code (`E_*`) so that
//! frontends can match on errors without parsing display strings.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("process has already been executed")]
    ProcessAlreadyExecuted,
    #[error("qubit allocation inside an adjoint scope")]
    AllocInsideAdjoint,
    #[error("qubit q{0} must be measured before it can be freed")]
    FreeUnmeasured(usize),
    #[error("qubit q{0} freed twice")]
    DoubleFree(usize),
    #[error("qubit belongs to a different process")]
    ForeignQubit,
    #[error("qubit q{0} is not allocated")]
    QubitNotAllocated(usize),
    #[error("qubit q{0} is already allocated")]
    QubitAlreadyAllocated(usize),
    #[error("gate target q{0} is an active control qubit")]
    TargetIsControl(usize),
    #[error("control qubit q{0} already active in an enclosing scope")]
    OverlappingControls(usize),
    #[error("measurement inside a control scope")]
    MeasureInsideCtrl,
    #[error("measurement inside an adjoint scope")]
    MeasureInsideAdjoint,
    #[error("non-unitary operation inside an adjoint scope")]
    NonUnitaryInAdjoint,
    #[error("qubit count {0} exceeds the supported limit")]
    TooManyQubits(usize),
    #[error("operands belong to different processes")]
    CrossProcessOperands,
    #[error("future belongs to a different process")]
    ForeignFuture,
    #[error("division by zero")]
    DivisionByZero,
    #[error("while condition carries no measurement; run the loop classically instead")]
    ClassicalConditionLoop,
    #[error("cannot execute while a control, adjoint or control-flow scope is open")]
    OpenScope,
    #[error("future was not fulfilled by the executed program")]
    FutureUnfulfilled,
    #[error("no futures demanded")]
    EmptyDemand,

    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("branch to undefined label @{0}")]
    UndefinedLabel(String),
    #[error("label @{0} defined more than once")]
    DuplicateLabel(String),
    #[error("register i{0} may be read before it is written")]
    RegisterUnwritten(usize),
    #[error("instruction not allowed at assembly level: {0}")]
    LevelViolation(String),

    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(u64),
    #[error("qubit limit of {0} exceeded")]
    QubitLimitExceeded(usize),
    #[error("coupling graph: {0}")]
    InvalidCouplingGraph(String),

    #[error("unknown example or missing file `{0}`")]
    UnknownExample(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            ProcessAlreadyExecuted => "E_PROC_EXECUTED",
            AllocInsideAdjoint => "E_ALLOC_IN_ADJOINT",
            FreeUnmeasured(_) => "E_FREE_UNMEASURED",
            DoubleFree(_) => "E_DOUBLE_FREE",
            ForeignQubit => "E_FOREIGN_QUBIT",
            QubitNotAllocated(_) => "E_QUBIT_NOT_ALLOCATED",
            QubitAlreadyAllocated(_) => "E_QUBIT_ALREADY_ALLOCATED",
            TargetIsControl(_) => "E_TARGET_IS_CONTROL",
            OverlappingControls(_) => "E_OVERLAPPING_CONTROLS",
            MeasureInsideCtrl => "E_MEASURE_IN_CTRL",
            MeasureInsideAdjoint => "E_MEASURE_IN_ADJOINT",
            NonUnitaryInAdjoint => "E_NON_UNITARY_IN_ADJOINT",
            TooManyQubits(_) => "E_TOO_MANY_QUBITS",
            CrossProcessOperands => "E_CROSS_PROCESS",
            ForeignFuture => "E_FOREIGN_FUTURE",
            DivisionByZero => "E_DIV_BY_ZERO",
            ClassicalConditionLoop => "E_CLASSICAL_LOOP",
            OpenScope => "E_OPEN_SCOPE",
            FutureUnfulfilled => "E_FUTURE_UNFULFILLED",
            EmptyDemand => "E_EMPTY_DEMAND",
            Syntax { .. } => "E_SYNTAX",
            UnknownMnemonic(_) => "E_UNKNOWN_MNEMONIC",
            UndefinedLabel(_) => "E_UNDEFINED_LABEL",
            DuplicateLabel(_) => "E_DUPLICATE_LABEL",
            RegisterUnwritten(_) => "E_REG_UNWRITTEN",
            LevelViolation(_) => "E_LEVEL_VIOLATION",
            StepLimitExceeded(_) => "E_STEP_LIMIT",
            QubitLimitExceeded(_) => "E_QUBIT_LIMIT",
            InvalidCouplingGraph(_) => "E_COUPLING_GRAPH",
            UnknownExample(_) => "E_UNKNOWN_EXAMPLE",
            Io(_) => "E_IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
