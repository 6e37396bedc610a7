//! Multilevel stochastic gradient methods for an elliptic optimal control
//! problem with a random diffusion coefficient.
//!
//! The crate provides the P1 finite element machinery on a nested mesh
//! hierarchy of the unit square ([`fem`]), the random coefficient and
//! parameter-space quadrature ([`rand_field`]), the control problem with its
//! sample-wise state/adjoint solves ([`problem`]), multilevel and
//! randomized-level gradient estimators ([`estimator`]), the iteration
//! schedules tying accuracy to iteration count ([`schedule`]), and the
//! optimization runners plus a deterministic reference solver ([`optimize`]).
//!
//! Sample evaluations run on a rayon pool when the default `parallel`
//! feature is on, and on the current thread otherwise; results are reduced
//! in a fixed order either way, so outputs are identical bit for bit.

pub mod error;
pub mod estimator;
pub mod fem;
pub mod optimize;
pub mod par;
pub mod problem;
pub mod rand_field;
pub mod rng;
pub mod schedule;

pub use error::{CoreError, Result};
