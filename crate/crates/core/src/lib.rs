//! Joint design of a radar code and its receive filter for spectrum sharing.
//!
//! The code is written as `s = sqrt(P) * exp(j phi) .* s0` around a reference `s0`.
//! The design maximizes the output SINR under per-band energy caps, a total
//! energy budget and a similarity constraint on the phase shifts `phi`, by
//! block coordinate ascent over the phases, the power and the filter.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arcset;
pub mod cdsolver;
pub mod error;
pub mod initializer;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod oracle;
pub mod phasestep;
pub mod pipeline;
pub mod scenario;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
