//! Robust tightly-coupled GNSS/INS estimation primitives.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. It contains:
//!
//! - [`interval`] and [`zonotope`]: set arithmetic used for error bounds and
//!   dynamic-model thresholds.
//! - [`filter`]: a model-generic Extended H∞ / Extended Kalman recursion,
//!   including the feasibility test and γ selection.
//! - [`nav`]: the 17-error-state strapdown main filter and the 8-error-state
//!   GNSS-only fallback filter.
//! - [`protection`]: zonotope propagation of the estimation error and
//!   protection-level extraction.
//! - [`fault`]: single-track-model thresholds, IMU consistency check and
//!   main/fallback supervision.
//!
//! Simulation, file formats and the CLI live in the `tcnav` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod fault;
pub mod filter;
pub mod interval;
pub mod nav;
pub mod protection;
pub mod zonotope;

pub use error::{Error, Result};
pub use interval::Interval;
pub use zonotope::Zonotope;
