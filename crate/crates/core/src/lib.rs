//! Few-level quantum simulation and macrorealism certification.
//!
//! * [`qcore`]: density operators, observables, evolution and channels.
//! * [`protocols`]: single-time, sequential, ideal-negative and blind
//!   measurement protocols, plus finite-shot sampling.
//! * [`macrocert`]: moments, Leggett-Garg inequalities, no-signaling-in-time
//!   witnesses, quasi-probabilities and feasibility of partial moment sets.

pub mod error;
pub mod macrocert;
pub mod protocols;
pub mod qcore;

pub use error::{Error, Result};
