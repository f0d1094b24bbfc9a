use alloc::string::String;

use crate::label::NodeLabel;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("box cannot be bisected: midpoint of coordinate {coordinate} is not strictly inside [{lo}, {hi}]")]
    NotBisectable { coordinate: usize, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("the root node has no parent")]
    RootHasNoParent,
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeLabel),
    #[error("node {0} is not a cherry (both children must be leaves)")]
    NotACherry(NodeLabel),
    #[error("invalid node label: {0}")]
    InvalidLabel(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("point {index} lies outside the root box")]
    PointOutsideRootBox { index: usize },
    #[error("the sample is empty")]
    EmptySample,
    #[error("leaf {0} holds data but has zero volume")]
    ZeroVolumeCell(NodeLabel),
    #[error("smoothing parameter must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("at least two points are needed, got {0}")]
    InsufficientData(u64),
    #[error("no candidate states to choose from")]
    EmptyCandidateSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
