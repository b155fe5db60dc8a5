//! Fluctuator-ensemble models of low- and high-frequency noise, qubit
//! dephasing under free-induction and spin-echo protocols, and the
//! Monte-Carlo trajectory oracle used to check every closed form.
//!
//! Units throughout: time in μs, rates in μs⁻¹, angular frequency in
//! rad·μs⁻¹. Conversions from s⁻¹ happen once, at the [`units`] boundary.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod dephasing;
pub mod error;
pub mod fit;
pub mod noise;
pub mod ode;
pub mod qubit;
pub mod rtp;
pub mod special;
pub mod units;

pub use error::{Error, Result};
