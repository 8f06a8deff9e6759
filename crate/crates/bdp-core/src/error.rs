//! Error type shared by every module in this crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
///
/// Validation failures are reported eagerly at construction time; numeric
/// routines never silently repair bad input (probabilities are rejected, not
/// renormalized).
#[derive(Debug, Error)]
pub enum Error {
    /// A dense enumeration would exceed the configured entry cap.
    #[error("cap exceeded: need {needed} entries, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    /// A directed graph required to be acyclic has a cycle.
    #[error("directed graph has a cycle")]
    CyclicGraph,

    /// A node index does not name a variable of the model.
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    /// A claimed separating set fails to block a path in the moralized graph.
    #[error("set does not separate node {target} from remote node {reached}")]
    NotASeparator { target: usize, reached: usize },

    /// A conditional probability was requested given an event of probability zero.
    #[error("conditioning event has probability zero")]
    ZeroConditioningEvent,

    /// The chain has no unique positive stationary distribution or mixes too slowly.
    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    /// The chain violates detailed balance with respect to its stationary distribution.
    #[error("chain is not reversible: detailed balance violated at pair ({i}, {j})")]
    NotReversible { i: usize, j: usize },

    /// The chain is shorter than the mixing analysis requires.
    #[error("chain of length {n} is too short: need at least {need}")]
    ChainTooShort { n: usize, need: usize },

    /// A tuning constant lies outside its admissible open interval.
    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    /// A parameter violates its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// A probability vector is malformed (wrong length, negative entry, or bad sum).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A node has no quilt candidates to choose from.
    #[error("empty candidate set for node {node}")]
    EmptyCandidateSet { node: usize },

    /// A query was evaluated against an empty dataset.
    #[error("empty dataset")]
    EmptyDataset,

    /// A selection mechanism was given an empty candidate range.
    #[error("empty candidate range")]
    EmptyRange,

    /// No outcome set clears the probability floor.
    #[error("no outcome set has probability above the floor")]
    NoFeasibleSubset,

    /// No noise scale can meet the requested privacy level for this model.
    #[error("infeasible calibration: {0}")]
    InfeasibleCalibration(String),

    /// A model or mechanism document is malformed.
    #[error("document error: {0}")]
    Document(String),
}
