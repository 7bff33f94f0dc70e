use crate::dyadic::NodeId;
use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("NotPSD: eigenvalue {min_eig:e} below the PSD tolerance")]
    NotPsd { min_eig: f64 },

    #[error("NotPSD: weight leaf {index} has eigenvalue {min_eig:e} below the PSD tolerance")]
    NotPsdLeaf { index: usize, min_eig: f64 },

    #[error("Singular: smallest eigenvalue {min_eig:e} at or below the singularity tolerance")]
    Singular { min_eig: f64 },

    #[error("DimensionMismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("DepthMismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },

    #[error("NonpositiveWeight: scalar weight leaf {index} is {value}")]
    NonpositiveWeight { index: usize, value: f64 },

    #[error("SelectionMismatch: selection does not partition the leaves")]
    SelectionMismatch,

    #[error("CaseMismatch: memory map disagrees with the competitor comparison at {node}")]
    CaseMismatch { node: NodeId },

    #[error("NotNormalized: Carleson constant {constant} exceeds 1")]
    NotNormalized { constant: f64 },

    #[error("ZeroSequence: cannot normalize an all-zero Carleson sequence")]
    ZeroSequence,

    #[error("ObjectiveError: {0}")]
    Objective(String),

    #[error("Malformed: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
