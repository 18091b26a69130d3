use thiserror::Error;

use crate::basis::Occupation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("occupation {occ} does not belong to the N = {total} basis")]
    OccupationNotInBasis { occ: Occupation, total: usize },

    #[error("site index {0} is out of range (sites are numbered 1 to 4)")]
    InvalidSite(usize),

    #[error("mode subset {0:?} is invalid: it must be a nonempty strict subset of {{1,2,3,4}} without repeats")]
    InvalidSubset(Vec<usize>),

    #[error("operands live on different bases (N = {left} vs N = {right})")]
    BasisMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("expectation value has imaginary residue {residue:e}")]
    NonRealExpectation { residue: f64 },

    #[error("invalid couplings: {0}")]
    InvalidCouplings(String),

    #[error("couplings are not integrable: need U13 = U24 = U0 and U12 = U14 = U23 = U34")]
    NotIntegrable,

    #[error("invalid band labels M = {m}, P = {p}: {reason}")]
    InvalidBand { m: usize, p: usize, reason: String },

    #[error("outcome {outcome} at site {site} has probability {probability:e}, below the collapse threshold")]
    ZeroProbabilityOutcome {
        site: usize,
        outcome: usize,
        probability: f64,
    },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("linear entropy {value} outside [0, {bound}]")]
    EntropyOutOfBounds { value: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("protocol precondition violated: {0}")]
    Protocol(String),

    #[error("time grid must be strictly increasing")]
    UnsortedTimes,

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
