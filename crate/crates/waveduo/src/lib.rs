//! Simulation and decay analysis for a pair of one-dimensional wave
//! equations coupled through their velocities, with frictional damping
//! acting on one of them inside a subregion:
//!
//! ```text
//! u_tt - a u_xx + b(x) y_t + c(x) u_t = 0      on (0,1)
//! y_tt -   y_xx - b(x) u_t            = 0      on (0,1)
//! u = y = 0                                    at x = 0, 1
//! ```
//!
//! Only `u` is damped (`c >= 0`); the coupling `b` is what lets the damping
//! reach `y`. The crate provides the explicit finite-difference scheme for
//! this system ([`scheme`]), its exactly-dissipated discrete energy
//! ([`energy`]), decay-rate diagnostics and classification ([`analysis`]),
//! and an experiment harness with a reference case catalog ([`harness`]),
//! all wired to a CLI ([`cli`]).

pub mod analysis;
pub mod cli;
pub mod energy;
pub mod harness;
pub mod model;
pub mod scheme;
