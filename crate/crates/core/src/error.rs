//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { offset: usize, name: String },

    #[error("function '{name}' at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },

    /// Evaluation or derivative left a primitive's domain. `node` is the
    /// 1-based index of the offending tape node.
    #[error("domain error at node {node}: {message}")]
    Domain { node: usize, message: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// Defensive: the parser cannot produce one, but hand-built graphs can.
    #[error("cycle detected involving node {node}")]
    Cycle { node: usize },

    #[error("cannot project order-{from} coordinates to order {to}")]
    Projection { from: u8, to: u8 },
}

pub type Result<T> = std::result::Result<T, Error>;
