//! Spectral Galerkin model of a nonautonomous wave equation with non-local
//! nonlinear damping and linear non-local anti-damping on `(0, L)`:
//!
//! `u_tt - u_xx + k(t) ||u_t||^p u_t + f(t, u) = int K(x, y) u_t(y) dy + h(x)`.
//!
//! The state is `V = (a, b)` in the orthonormal sine basis, with
//! `||V||_X^2 = sum lambda_k a_k^2 + sum b_k^2`.

pub mod config;
pub mod contraction;
pub mod energy;
pub mod experiments;
pub mod f;
pub mod quad;
pub mod solver;

pub use config::NweConfig;
pub use solver::{Model, NweProcess, WaveState};
