//! One-bit precoding for massive multiuser MIMO downlink with QAM signaling.
//!
//! The crate is organized bottom-up:
//!
//! * [`mimo`] holds the channel, constellation, modulation and the
//!   complex-to-real lifting every solver works on.
//! * [`ser`] evaluates the Q-function, per-user error-probability bounds and
//!   the exact worst-case residual objective.
//! * [`precoder`] implements the penalty-continuation block coordinate
//!   descent solver with its log-sum-exp smoothed FISTA inner loop, plus the
//!   zero-forcing baselines.
//! * [`sim`] runs deterministic, parallel Monte Carlo BER sweeps and writes
//!   plot-ready CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod mimo;
pub mod precoder;
pub mod rng;
pub mod ser;
pub mod sim;

pub use error::{Error, Result};
