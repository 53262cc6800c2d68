//! Certified lower and upper bounds for parametric inf-sup constants with
//! the natural-norm successive constraint method.
//!
//! The pipeline: an affine operator ([`truth`]) gives supremizer operators
//! and a natural-norm surrogate per control point ([`natural_norm`]); small
//! linear programs bound that surrogate ([`scm`], [`lp`]); a `Q̂`-term
//! expansion gives matching upper bounds ([`certification`]); the greedy
//! drivers place control points until the relative gap meets a tolerance
//! ([`greedy`]).

pub mod certification;
pub mod cli;
pub mod config;
pub mod error;
pub mod greedy;
pub mod linalg;
pub mod lp;
pub mod natural_norm;
pub mod oracles;
pub mod plot;
pub mod scm;
pub mod table;
pub mod truth;
pub mod validation;

pub use error::{Error, Result};
