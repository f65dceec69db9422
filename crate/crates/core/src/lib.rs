//! Higher-order automatic differentiation for scalar functions
//! f: R^D -> R written in a small expression language.
//!
//! The engine parses an expression into a shared-subexpression DAG, compiles
//! it to a topologically sorted tape, and runs explicit jet sweeps over it:
//!
//! - [`forward`]: directional derivatives up to third order and the aligned
//!   univariate Taylor-mode pushforward, all local to the tape nodes.
//! - [`reverse`]: the gradient by local reverse accumulation, plus the full
//!   Hessian and full third-order partial-derivative array, each from a
//!   single covelocity pullback over explicit component functions.
//! - [`mixed`]: one forward pass interleaved with one reverse pass for
//!   Hessian-vector products and gradients of second-order directional
//!   derivatives, with full-Hessian assembly and the gradient of Tr(M.H)
//!   built on top.
//! - [`oracle`]: independent ground truth (central finite differences and
//!   exact symbolic differentiation) that every sweep is tested against.
//!
//! Derivative updates use analytic partials from one registry
//! ([`primitive`]) rather than recursively nested first-order sweeps, so
//! each operator is a single explicit pass with a fixed per-node coordinate
//! bank.

pub mod check;
pub mod component;
pub mod corpus;
pub mod error;
pub mod forward;
pub mod mixed;
pub mod oracle;
pub mod parser;
pub mod primitive;
pub mod reverse;
pub mod stats;
pub mod symtensor;
pub mod tape;

pub use error::{Error, Result};
pub use parser::{parse, ExprGraph};
pub use primitive::{PartialSet, Primitive};
pub use stats::SweepStats;
pub use symtensor::{SymCube, SymMat};
pub use tape::{build_tape, Tape};
