//! Reliability and secrecy outage analysis for a finite Poisson network
//! protected by friendship-based cooperative jamming.
//!
//! The transmitter sits at the origin of a disk of radius `D`; its friends in
//! a local circle of radius `R1` always jam, and friends in the annulus
//! `[R1, R2]` jam according to a location-based policy. The crate provides
//! closed-form interference Laplace transforms, transmission and secrecy
//! outage probabilities built on them, and a Monte Carlo simulator that checks
//! both.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod montecarlo;
pub mod outage;
pub mod quad;

pub use analytic::{
    laplace_closed, laplace_numeric, log_exponent, LaplaceQuery, LogExponent, Method,
};
pub use geometry::{PolicyFn, RngStream};
pub use model::{validate, JammingScheme, NetworkConfig, Point, PointSet, Policy};
pub use montecarlo::{
    estimate, estimate_nearest_only, run_trial, Estimates, Execution, TrialOutcome,
};
