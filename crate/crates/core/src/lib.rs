//! Linear bandits whose action sets are driven by a finite Markov chain.
//!
//! Two reductions turn the contextual problem into a single fixed-arm linear
//! bandit over "surrogate" arms, the expected greedy action of each candidate
//! parameter: [`known`] when the stationary distribution is available, and
//! [`unknown`] when it must be estimated epoch by epoch. [`baseline`] is a
//! contextual LinUCB for comparison, [`verify`] holds the numerical checks, and
//! [`harness`] runs and records multi-seed experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod config;
pub mod delay;
mod episode;
pub mod env;
pub mod error;
pub mod harness;
pub mod known;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod surrogate;
pub mod trace;
pub mod unknown;
pub mod verify;

pub use config::{Algo, RunConfig};
pub use episode::RunOutput;
pub use error::{Error, Result};
