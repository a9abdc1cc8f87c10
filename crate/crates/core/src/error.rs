use std::fmt;

use thiserror::Error;

/// A single structural or numerical problem found while validating a network.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateVariable { variable: String },
    TooFewStates { variable: String, count: usize },
    DuplicateState { variable: String, label: String },
    InvalidBounds { variable: String, lo: f64, hi: f64 },
    MissingCpt { variable: String },
    UnknownParent { variable: String, parent: String },
    DuplicateParent { variable: String, parent: String },
    Cycle { variables: Vec<String> },
    DimensionMismatch { variable: String, detail: String },
    EntryOutOfRange { variable: String, row: usize, value: f64 },
    RowSum { variable: String, row: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVariable { variable } => {
                write!(f, "duplicate variable name `{variable}`")
            }
            Violation::TooFewStates { variable, count } => {
                write!(f, "variable `{variable}` has {count} state(s); at least 2 are required")
            }
            Violation::DuplicateState { variable, label } => {
                write!(f, "variable `{variable}` repeats state label `{label}`")
            }
            Violation::InvalidBounds { variable, lo, hi } => {
                write!(f, "variable `{variable}` has bounds [{lo}, {hi}] with lo >= hi")
            }
            Violation::MissingCpt { variable } => write!(f, "variable `{variable}` has no cpt"),
            Violation::UnknownParent { variable, parent } => {
                write!(f, "unknown parent `{parent}` of variable `{variable}`")
            }
            Violation::DuplicateParent { variable, parent } => {
                write!(f, "variable `{variable}` lists parent `{parent}` twice")
            }
            Violation::Cycle { variables } => {
                write!(f, "cycle detected among {}", variables.join(", "))
            }
            Violation::DimensionMismatch { variable, detail } => {
                write!(f, "dimension mismatch in cpt of `{variable}`: {detail}")
            }
            Violation::EntryOutOfRange { variable, row, value } => {
                write!(f, "cpt of `{variable}` row {row} has entry {value} outside [0, 1]")
            }
            Violation::RowSum { variable, row, sum } => {
                write!(f, "cpt of `{variable}` row {row} sums to {sum}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no state `{label}`")]
    UnknownState { variable: String, label: String },

    #[error("evidence index {index} is out of range for variable `{variable}` with {cardinality} states")]
    EvidenceOutOfRange {
        variable: String,
        index: usize,
        cardinality: usize,
    },

    #[error("zero-probability evidence")]
    ZeroProbabilityEvidence,

    #[error("joint state space of {size} configurations exceeds the enumeration limit of {limit}")]
    StateSpaceTooLarge { size: f64, limit: f64 },

    #[error("intermediate factor of {size} entries exceeds the limit of {limit}")]
    FactorTooLarge { size: f64, limit: f64 },

    #[error("cannot split elementary state {index} of variable `{variable}`")]
    ElementaryState { variable: String, index: usize },

    #[error("partition does not match network: {0}")]
    PartitionMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed trace data: {0}")]
    Trace(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
