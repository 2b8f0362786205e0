//! Gaussian-mixture HISP multi-object filter with a GM-PHD baseline, the
//! OSPA metric and a Monte Carlo harness for a range-bearing scenario.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod association;
pub mod config;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod hypothesis;
pub mod metrics;
pub mod numeric;
pub mod phd;
pub mod scan;
pub mod sensor;
pub mod sim;
pub mod verify;

pub use error::{HispError, Result};
