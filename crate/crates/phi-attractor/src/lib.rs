//! Numerical laboratory for generalized decay-rate pullback attractors.
//!
//! The crate is organised around a handful of pieces that build on each other:
//!
//! - [`decay`]: decay functions and the translate-ratio condition.
//! - [`metric`]: finite ensembles, Hausdorff semidistance, ball coverings.
//! - [`hilbert`]: power-map inequalities on real inner-product spaces.
//! - [`poly_rate`]: the `u`/`v` pair, the `t_n = v^n(t_0)` sequence and rate constants.
//! - [`process`]: evolution processes, families, and absorption/rate checkers.
//! - [`constructor`]: the discrete covering recursion that builds an attracting family.
//! - [`nwe`]: spectral Galerkin solver for a wave equation with non-local damping.
//! - [`cli`]: configuration, orchestration and artifact writing for the `phi-lab` binary.

pub mod cli;
pub mod constructor;
pub mod decay;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod metric;
pub mod nwe;
pub mod poly_rate;
pub mod process;

pub use error::{Error, Result};
