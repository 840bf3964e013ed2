//! Corroborative verification and validation toolkit for robotic swarms.
//!
//! The crate covers the full desk-scale workflow for the cloakroom retrieval
//! scenario: a low-fidelity discrete-time simulator ([`lfsim`]), a macroscopic
//! population model ([`macromodel`]), a trace cleaning and discretization
//! pipeline ([`pipeline`]), a labelled CTMC builder ([`markov`]), a property
//! language parser ([`propspec`]) and a probabilistic model checker
//! ([`checker`]) with counterexample extraction.

pub mod checker;
pub mod error;
pub mod lfsim;
pub mod macromodel;
pub mod markov;
pub mod pipeline;
pub mod propspec;
pub mod report;
pub mod scenario;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
