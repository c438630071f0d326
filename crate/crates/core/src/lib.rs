//! Simulation of networks of probabilistic binary memristors.
//!
//! The crate offers three routes to the same switching statistics:
//!
//! * [`master`]: the master equation over all `2^N` network states, plus the
//!   closed forms available for identical devices in series or parallel;
//! * [`montecarlo`]: fixed-step and event-driven stochastic trajectories;
//! * [`stats`]: histograms, correlation functions and joint-distribution
//!   identities used to cross-check the other two.
//!
//! Device rate laws live in [`devices`]; circuits in [`network`], [`netlist`]
//! and [`nodal`].

pub mod cli;
pub mod devices;
pub mod error;
pub mod iv;
pub mod master;
pub mod montecarlo;
pub mod netlist;
pub mod network;
pub mod nodal;
pub mod quad;
pub mod stats;

pub use error::{Error, Result};
