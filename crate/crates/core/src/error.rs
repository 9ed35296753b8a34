use thiserror::Error;

/// Why a block map description was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("block has {found} entries but the declared size needs {expected}")]
    EntryCount { expected: usize, found: usize },
    #[error("line {line}: expected `+` or `-`, found `{token}`")]
    BadToken { line: usize, token: String },
    #[error("axis {axis} has length {size}; every axis needs length at least 2")]
    AxisTooShort { axis: usize, size: usize },
    #[error("all block entries are `{sign}`; a bijective map needs both signs")]
    AllEqual { sign: char },
    #[error("a block map needs at least one dimension")]
    NoDimensions,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid substitution: {0}")]
    Map(#[from] MapError),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("memo budget of {limit} entries exhausted")]
    MemoBudget { limit: usize },

    #[error("window not covered by patch: {0}")]
    Range(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("recursion does not determine core")]
    SingularCore,

    #[error("no seed cycle found: {0}")]
    SeedSearch(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
