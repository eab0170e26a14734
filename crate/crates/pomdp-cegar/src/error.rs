use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row sum violation at {context}: weights sum to {sum}, expected 1")]
    RowSum { context: String, sum: String },
    #[error("dangling reference to `{name}` in {context}")]
    DanglingReference { name: String, context: String },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported fragment: {0}")]
    UnsupportedFragment(String),
    #[error("path index out of range: ({i},{j}) on a path of length {len}")]
    IndexOutOfRange { i: usize, j: usize, len: usize },
    #[error("memo budget of {budget} entries exceeded")]
    BudgetExceeded { budget: usize },
    #[error("adversary has no entry for observation history {0}")]
    MissingAdversaryEntry(String),
    #[error("counterexample enumeration exhausted below the threshold")]
    Exhausted,
    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),
    #[error("action sets differ: {0}")]
    ActionSetMismatch(String),
    #[error("counterexample is not spurious")]
    NotSpurious,
    #[error("no block in the refinement set has more than one member")]
    NoSplittableBlock,
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
