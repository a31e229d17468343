//! Command line front end, CSV formats and experiment harness for
//! `dp-composer-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;

pub use error::{Error, Result};
