// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("alternation parameter {0} outside the open interval (0, 2)")]
    InvalidAlternation(f64),

    #[error("field angle {0} outside [0, pi]")]
    InvalidOrientation(f64),

    #[error("pair ({i}, {j}) is not a pair of distinct nodes")]
    InvalidPair { i: usize, j: usize },

    #[error("degenerate geometry: nodes {i} and {j} coincide")]
    DegenerateGeometry { i: usize, j: usize },

    #[error("non-positive distance {0}")]
    NonPositiveDistance(f64),

    #[error("neighbour window M={window} outside 1..={max}")]
    InvalidWindow { window: usize, max: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("node index {index} out of range for a chain of {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("phase argument {0:e} exceeds the 1e9 double-precision budget")]
    PhaseRange(f64),

    #[error("deviation ratio undefined: all-node time average J is zero (transfer suppressed)")]
    UndefinedRatio,

    #[error("full-space oracle limited to {max} spins, got {n}")]
    SizeLimit { n: usize, max: usize },

    #[error("invalid time window: {0}")]
    InvalidWindowLength(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
