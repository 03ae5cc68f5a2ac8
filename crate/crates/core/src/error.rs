use std::io;

use thiserror::Error;

/// Errors produced by graph construction, coverings, solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("edge id {id} out of range for a graph with {edge_count} edges")]
    EdgeOutOfRange { id: usize, edge_count: usize },

    #[error("edge {0} is not covered by any block")]
    UncoveredEdge(usize),

    #[error("block {0} is empty")]
    EmptyBlock(usize),

    #[error("blocks {first} and {second} share node {node}")]
    OverlappingBlocks { first: usize, second: usize, node: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not {0}")]
    NotSquareSymmetric(&'static str),

    #[error("all values are numerically zero")]
    RankZero,

    #[error("{quantity} = {value} is outside its valid range")]
    OutOfRange { quantity: &'static str, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
