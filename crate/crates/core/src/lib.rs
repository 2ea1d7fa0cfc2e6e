//! Sonority feature extraction: epochs, HNGD vocal-tract features, source
//! strength of excitation, suprasegmental periodicity, and KLD-weighted fusion.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod config;
pub mod corpus;
pub mod dsp;
pub mod epoch;
pub mod error;
pub mod fusion;
pub mod pipeline;
pub mod source;
pub mod supra;
pub mod synth;
pub mod vts;
pub mod ztw;

pub use error::{Error, Result};
