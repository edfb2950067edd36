use thiserror::Error;

use crate::simplex::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    EntryOutOfRange { index: usize, value: f64 },

    #[error("placement must contain at least one sensor")]
    EmptyInput,

    #[error("{what}: n = {n} exceeds the size guard {max}")]
    TooLarge {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("failure probability {0} is outside the accepted range")]
    BadProbability(f64),

    #[error("Cortes model needs 0 <= k < n, got k = {k}, n = {n}")]
    BadCortes { k: usize, n: usize },

    #[error("failure model is defined for {model_n} sensors but the placement has {placement_n}")]
    ModelMismatch { model_n: usize, placement_n: usize },

    #[error("active set member {member} is not a sensor index below {n}")]
    BadActiveSet { member: usize, n: usize },

    #[error("{kind} placement is not defined for n = {n}: {reason}")]
    BadArity {
        kind: &'static str,
        n: usize,
        reason: &'static str,
    },

    #[error("no three-cluster size k satisfies the comparison at n = {n}, p = {p}")]
    NoValidK { n: usize, p: f64 },

    #[error("epsilon {eps} outside the valid range ({lo}, {hi})")]
    BadEpsilon { eps: f64, lo: f64, hi: f64 },

    #[error("LP solver stopped with status {0:?}")]
    Solver(SolveStatus),

    #[error("cutting plane did not reach the gap tolerance after {rounds} rounds (gap {gap:e})")]
    NoConvergence {
        rounds: usize,
        gap: f64,
        positions: Vec<f64>,
        cost: f64,
    },

    #[error("LP text parse error on line {line}: {msg}")]
    LpParse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
