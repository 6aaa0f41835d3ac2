//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two operands have different dimensions.
    #[error("dimension mismatch: expected n={expected}, got n={got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dimension parameter is outside the supported range.
    #[error("dimension n={value} out of range for {what} (must be {min} ≤ n ≤ {max})")]
    DimensionRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    /// Matrix is singular, i.e. not an element of GL_n(F2).
    #[error("matrix is singular: not in GL_{n}")]
    NotInvertible { n: usize },

    /// An exhaustive enumeration was requested above the configured cap.
    #[error("{what} at n={requested} exceeds the enumeration cap n ≤ {cap}")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// An exact integer result would overflow the widest supported integer.
    #[error("{what} overflows u128 for n={value}; largest supported n is {max}")]
    Overflow {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// Weight parameter outside the admissible range.
    #[error("weight {wt} out of range for n={n}: {reason}")]
    WeightRange { n: usize, wt: u64, reason: &'static str },

    /// ANF syntax error, with a byte offset into the input.
    #[error("ANF syntax error at byte {pos}: {msg}")]
    AnfSyntax { pos: usize, msg: String },

    /// ANF variable index outside 1..=n.
    #[error("ANF variable x{var} at byte {pos} out of range (dimension n={n})")]
    AnfVarRange { var: usize, n: usize, pos: usize },

    /// Malformed truth-table hex string.
    #[error("truth table hex error: {msg}")]
    TtHex { msg: String },

    /// Malformed matrix row string.
    #[error("matrix format error: {msg}")]
    MatrixFormat { msg: String },

    /// Vectors passed where a linearly independent family was required.
    #[error("{which} vectors are linearly dependent (rank {rank} < {len})")]
    DependentVectors {
        which: &'static str,
        rank: usize,
        len: usize,
    },

    /// q must be balanced for this operation.
    #[error("q must be balanced (weight 2^(n-1)); got weight {wt}")]
    UnbalancedQ { wt: u64 },

    /// q must be non-constant for this operation.
    #[error("q is constant; rho and the q-transform classification are undefined")]
    ConstantQ,

    /// Unknown claim identifier.
    #[error("unknown claim id {id:?}; expected one of {known}")]
    UnknownClaim { id: String, known: &'static str },

    /// Invalid command-line usage not caught by the argument parser.
    #[error("usage error: {msg}")]
    Usage { msg: String },
}

impl Error {
    /// Process exit code this error maps to (usage and capacity problems are 2).
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
