//! Benchmark tasks for temporal reasoning over finite-state controllers.
//!
//! The crate reads controllers in HOA format ([`automata`]), simulates them
//! on finite traces ([`execution`]), derives counterfactual causes for output
//! effects ([`causality`]), assembles trace-acceptance and causality tasks
//! ([`taskgen`]) and scores model answers ([`evaluation`]).

pub mod automata;
pub mod causality;
pub mod evaluation;
pub mod execution;
pub mod fixtures;
pub mod rng;
pub mod taskgen;
