//! Simulation and analysis toolkit for a cavity-enhanced quantum-dot
//! entangled photon pair source.
//!
//! The crate models the full measurement chain of a biexciton-exciton
//! cascade in a broadband Purcell microcavity: closed-form emitter/cavity
//! physics, a pulse-by-pulse Monte-Carlo cascade simulator, a detection
//! chain producing time-tagged click streams, coincidence analysis,
//! two-photon interference, and cavity design-rule helpers, wired together
//! by a JSON-configured experiment runner and the `qtt` command line tool.

// Validation guards are written as `!(x >= 0.0)` on purpose: the negated
// comparison is the branch that must also catch NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod cbg;
pub mod config;
pub mod correlation;
pub mod detection;
pub mod error;
pub mod hom;
pub mod runner;
pub mod source;
pub mod state;
pub mod timetag;

pub use error::{Error, Result};
