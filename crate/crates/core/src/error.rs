use thiserror::Error;

use crate::tree::VertexId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tree spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("resource guard: {what} would need {requested}, limit is {limit}")]
    ResourceLimit { what: &'static str, requested: u128, limit: u128 },

    #[error("vertex {0} is not part of this tree")]
    UnknownVertex(VertexId),

    #[error("address {0:?} does not name a vertex of this tree")]
    UnknownAddress(Vec<u32>),

    #[error("edge ({parent:?}, {child:?}) is not a tree edge")]
    UnknownEdge { parent: Vec<u32>, child: Vec<u32> },

    #[error("objects live on different trees (k={expected_k}, depth={expected_depth} vs k={found_k}, depth={found_depth})")]
    TreeMismatch {
        expected_k: u32,
        expected_depth: u32,
        found_k: u32,
        found_depth: u32,
    },

    #[error("vertex set is not connected")]
    Disconnected,

    #[error("configurations differ at boundary vertex {0}")]
    BoundaryTouch(VertexId),

    #[error("secondary dimer pairing failed at dimer ({0}, {1}); retry with another seed")]
    SecondaryDimerStuck(VertexId, VertexId),

    #[error("edge set is not a dimer covering of the interior: {0}")]
    NotADimerCover(String),

    #[error("no samples left after burn-in")]
    EmptySample,
}
