//! Multiport MIMO channel models and coupling-aware LMMSE channel estimation.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrixkit`]: dense complex matrices and factorizations.
//! * [`netparams`]: S/Z network parameters, Touchstone I/O, generators.
//! * [`channel`]: effective channels, spatial correlations and noise covariances.
//! * [`estimate_sc`] / [`estimate_mc`]: single-carrier and OFDM LMMSE estimators.
//! * [`rate`]: water-filling and achievable-rate lower bounds.
//! * [`experiments`]: seeded Monte-Carlo sweeps and result serialization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod consts;
pub mod estimate_mc;
pub mod estimate_sc;
pub mod experiments;
pub mod matrixkit;
pub mod netparams;
pub mod random;
pub mod rate;

pub use matrixkit::{CMat, LinalgError, C64};
