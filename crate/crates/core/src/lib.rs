//! Sample-complexity bounds and GORP-family learners for deterministic tabular MDPs.
//!
//! The crate covers the whole pipeline: building MDPs (analytical families or
//! exhaustive enumeration of a simulator), exact dynamic programming, closed-form
//! and tight effective-horizon bounds, executable learners, and the metrics used
//! to compare bounds with measured sample complexity.

pub mod bounds;
pub mod builtin;
pub mod dp;
pub mod enumerate;
pub mod envgen;
pub mod error;
pub mod io;
pub mod learners;
pub mod mdp;
pub mod metrics;
pub mod tightbound;

pub use error::{Error, Result};
pub use mdp::{Policy, QTable, TabularMdp};
