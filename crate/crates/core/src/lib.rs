//! Exact, mean-field and large-n analysis of insensitive load balancing over
//! `n` homogeneous processor-sharing servers with buffer depth `theta`.
//!
//! The crate is `no_std` (it needs `alloc`) and splits into:
//!
//! * [`math`]: truncated exponential sums, the Erlang loss formula and its
//!   inverse, the mean-field fixed point, the rate function `R` and the QED
//!   kernel `PhiHat`.
//! * [`exact`]: finite-`n` state enumeration, the reversible stationary
//!   measure, exact blocking by enumeration and by the integral transform,
//!   the generator and a linear-solve oracle, heterogeneous server types.
//! * [`meanfield`]: the mean-field ODE and its integrator.
//! * [`asymptotics`]: sub-critical, critical (QED) and super-critical blocking
//!   laws, staffing, CLT covariance, moderate and large deviations.
//! * [`sim`]: a discrete-event processor-sharing simulator with pluggable
//!   routing policies and job-size distributions.
#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod math;
pub mod meanfield;
pub mod sim;

pub use config::{LevelDistribution, SystemConfig};
pub use error::{Error, Result};
