use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} out of range (1..=16)")]
    QubitCount(usize),
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid measurement basis {0}: every site must carry X, Y or Z")]
    InvalidBasis(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("duplicate Pauli term {pauli} (terms {first} and {second})")]
    DuplicateTerm { pauli: String, first: usize, second: usize },
    #[error("degenerate observable: {0}")]
    DegenerateObservable(String),
    #[error("record basis {0} cannot be produced by the plan")]
    ForeignRecord(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("plan kind mismatch: {0}")]
    WrongPlanKind(String),
    #[error("term {index} ({pauli}) is hit by no basis of the plan")]
    Coverage { index: usize, pauli: String },
    #[error("records do not align with the plan: {0}")]
    RecordPlanMismatch(String),
    #[error("need at least {needed} snapshots, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("not a valid density matrix: {0}")]
    InvalidState(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for the coverage / degenerate-observable family of failures.
    pub fn is_coverage(&self) -> bool {
        matches!(self, Error::Coverage { .. } | Error::DegenerateObservable(_))
    }
}
