use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by constructors, checkers and the decomposition procedure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("need at least 3 alternatives and 2 voters (got m={m}, n={n})")]
    DegenerateSize { m: usize, n: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid preference: {0}")]
    InvalidPreference(String),

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),

    #[error("invalid interval [a{lo}, a{hi}]")]
    InvalidInterval { lo: usize, hi: usize },

    #[error("mixture weights must be non-negative and sum to 1 (sum = {0})")]
    BadWeights(String),

    #[error("invalid thresholds ({klo}, {khi}) for m = {m}")]
    InvalidThresholds { klo: usize, khi: usize, m: usize },

    #[error("empty collection: {0}")]
    EmptyCollection(&'static str),

    #[error("empty vertex set")]
    EmptyVertexSet,

    #[error("vertex-path enumeration exceeded cap of {cap}")]
    EnumerationOverflow { cap: usize },

    #[error("domain is not regular: {0}")]
    NotRegular(String),

    #[error("invalid ballots: {0}")]
    InvalidBallots(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("operation requires anonymous ballots")]
    RequiresAnonymity,

    #[error("constrained random-dictatorship condition violated: {0}")]
    CrdViolated(String),

    #[error("voter ballots fail monotonicity; per-capita monotonicity is required: {0}")]
    PerCapitaRequired(String),

    #[error("alpha equals 1/n: ballots are already a uniform mixture of voter rules")]
    TerminalCase,

    #[error("ballots are not anonymous")]
    NotAnonymous,

    #[error("ballots fail the constrained random-dictatorship condition")]
    NotCrd,

    #[error("ballots fail per-capita monotonicity: {0}")]
    NotPerCapitaMonotone(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("budget exceeded: {needed} dominance checks required, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("malformed input: {0}")]
    Malformed(String),
}
