//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An edge with no vertices. The edge number is the 1-based position in
    /// the input edge list.
    #[error("edge {edge}: empty vertex set")]
    EmptyEdge { edge: usize },

    /// An edge whose vertex set collapses to fewer than two distinct vertices.
    #[error("edge {edge}: fewer than two distinct vertices")]
    SingletonEdge { edge: usize },

    #[error("edge {edge}: weight {weight} is not strictly positive")]
    NonpositiveWeight { edge: usize, weight: f64 },

    /// `index` is reported 1-based, matching the external text format.
    #[error("edge {edge}: vertex index {index} outside 1..={vertex_count}")]
    IndexOutOfRange {
        edge: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("hypergraph has no edges")]
    NoEdges,

    #[error("edge {edge} has {size} vertices; operation requires an ordinary graph (every edge of size 2)")]
    NotAnOrdinaryGraph { edge: usize, size: usize },

    #[error("{context}: no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// Periodic solvability requires the mean forcing over each component to
    /// integrate to zero over one period.
    #[error("incompatible forcing: component {component} has mean-forcing integral {residual:.6e} over the period, above tolerance {tol:.3e}; the periodic problem requires a zero integral per component")]
    IncompatibleForcing {
        component: usize,
        residual: f64,
        tol: f64,
    },

    #[error("trajectories are on different time grids")]
    GridMismatch,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Short machine-readable kind tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyEdge { .. } => "EmptyEdge",
            Error::SingletonEdge { .. } => "SingletonEdge",
            Error::NonpositiveWeight { .. } => "NonpositiveWeight",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::NoEdges => "NoEdges",
            Error::NotAnOrdinaryGraph { .. } => "NotAnOrdinaryGraph",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::IncompatibleForcing { .. } => "IncompatibleForcing",
            Error::GridMismatch => "GridMismatch",
            Error::Parse { .. } => "Parse",
            Error::Invalid(_) => "Invalid",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
