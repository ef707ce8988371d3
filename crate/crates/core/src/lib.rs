//! Prescribed-time stability toolkit for switching systems with resets.
//!
//! Blow-up gains and the time dilation that removes their finite escape,
//! hybrid arcs simulated in either time scale, blow-up dwell-time and
//! activation-time signal classes, Lyapunov certificates with the constants
//! of the resulting bounds, and three worked scenarios.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli;
pub mod error;
pub mod hybrid;
pub mod linalg;
pub mod scenarios;
pub mod stability;
pub mod switching;
pub mod util;

pub use blowup::BlowUpParams;
pub use error::{Error, Result};
