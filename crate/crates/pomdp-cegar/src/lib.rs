//! Counterexample-guided abstraction refinement for POMDPs against
//! finite-horizon safety specifications.
//!
//! A POMDP is verified against a bounded-until probabilistic formula by
//! translating it to an observation-labeled weighted automaton, abstracting
//! that automaton through quotients of consistent state partitions, and
//! refining the partition whenever a counterexample found on the abstraction
//! turns out to be spurious on the concrete system.

pub mod abstraction;
pub mod adversary;
pub mod cegar;
pub mod cex;
pub mod checker;
pub mod cli;
pub mod error;
pub mod logic;
pub mod model;
pub mod parse;
pub mod rational;
pub mod refinement;
pub mod report;

pub use error::{Error, Result};
pub use rational::Rational;
