use std::fmt;

/// Why a strategy failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The strategy asked to fuse chains that are not present.
    NullFusion { k: u32, l: u32 },
    /// The strategy stopped while two or more chains were left.
    PrematureStop,
    /// The strategy kept acting on a terminal configuration or looped.
    NonTerminating,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NullFusion { k, l } => write!(f, "null fusion <{k},{l}>"),
            Violation::PrematureStop => write!(f, "premature stop"),
            Violation::NonTerminating => write!(f, "non-terminating"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("null fusion: chains of lengths {k} and {l} are not both present in `{config}`")]
    NullFusion { k: u32, l: u32, config: String },

    #[error("invalid chain index pair ({i}, {j}) for {chains} chains")]
    InvalidIndex { i: usize, j: usize, chains: usize },

    #[error("invalid configuration key `{0}`")]
    InvalidKey(String),

    #[error("invalid rational `{0}`")]
    InvalidRational(String),

    #[error("invalid success probability `{0}`: must lie in (0, 1]")]
    InvalidProbability(String),

    #[error("strategy `{strategy}` violated validity after event `{event}`: {violation}")]
    StrategyViolation {
        strategy: String,
        event: String,
        violation: Violation,
    },

    #[error("table budget of {budget} entries exceeded at vertex-count level {level} ({completed} entries completed)")]
    BudgetExceeded {
        budget: usize,
        level: u32,
        completed: usize,
    },

    #[error("event-tree enumeration is limited to total length {limit}, got {got}")]
    SizeGuard { limit: u32, got: u32 },

    #[error("linear-program certificate failed for N={n}: {reason}")]
    Certificate { n: u32, reason: String },

    #[error("lower-bound hypothesis violated at n = {failing:?}")]
    Hypothesis { failing: Vec<u32> },

    #[error("{0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
