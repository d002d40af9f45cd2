use thiserror::Error;

use crate::analysis::SigmoidFit;
use crate::topology::NodeId;

/// Errors produced by the simulator and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("nodes {0} and {1} are not connected")]
    DisconnectedPair(NodeId, NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("path has no hops")]
    EmptyPath,

    #[error("path is too short for this protocol: {0} hops")]
    PathTooShort(usize),

    #[error("negative fiber length {0} km")]
    NegativeLength(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("key pool is empty")]
    EmptyPool,

    #[error("zero rounds")]
    ZeroRounds,

    #[error("empty input")]
    EmptyInput,

    #[error("bad smoothing window: {0}")]
    BadWindow(String),

    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("total sum of squares is zero")]
    DegenerateVariance,

    #[error("sigmoid fit did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<SigmoidFit>,
    },

    #[error("at sweep point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
