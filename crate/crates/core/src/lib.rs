//! Utility-driven signal sampling and within-group consensus.
//!
//! Agents pick which signal to sample (a hate-spreading leader, a
//! policymaker, or their own prior) by maximizing instrumental plus
//! psychological utility, then average beliefs inside their social group
//! until consensus. The crate simulates the resulting period dynamics and
//! analyzes them as a piecewise-linear interval map.

// guards like `!(x > 0.0)` are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod consensus;
pub mod decisions;
pub mod error;
pub mod exec;
pub mod leader;
pub mod matrix;
pub mod model;
pub mod pwlmap;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use exec::Execution;
