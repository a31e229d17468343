//! Exact sensitivity and worst-case bias calculators for the sample mean and
//! variance of partitioned ("gridded") datasets under user-level differential
//! privacy, the release mechanisms built on them, and the Clip-User
//! suppression algorithm that trades per-grid worst-case error against the
//! privacy loss of composing many per-grid releases.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the Monte Carlo harness live in the `dp-composer` crate.
//!
//! ```
//! use dp_composer_core::sensitivity::{mean_sensitivity, variance_sensitivity};
//!
//! // four users with one sample each, values in [0, 1]
//! let counts = [1, 1, 1, 1];
//! assert_eq!(mean_sensitivity(&counts, 1.0).unwrap(), 0.25);
//! assert_eq!(variance_sensitivity(&counts, 1.0).unwrap().delta_var, 3.0 / 16.0);
//! ```

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod composition;
pub mod dataset;
mod error;
pub mod grouping;
pub mod mechanisms;
pub mod rng;
pub mod sensitivity;
pub mod synth;
pub mod worst_case_bias;

pub use error::{Error, Result};

pub use dataset::{Dataset, GridData, GridId, GridStats, OccupancyArray, Record, UserId};
pub use rng::RngStream;
