//! Experiment harness for the multilevel stochastic-gradient core: JSON
//! configs with named-key validation, repetition orchestration with
//! replayable sidecars, reference-control caching, and slope fitting for
//! convergence/complexity tables.

pub mod config;
pub mod experiment;
pub mod slope;
