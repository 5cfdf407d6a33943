//! Innovation-driven recurrent cells for time-series forecasting.
//!
//! The crate implements six recurrent cell kinds — RNN, GRU, LSTM and their
//! innovation-driven twins IRNN, IGRU, ILSTM, which feed the previous
//! one-step prediction error back into the recurrence the way a Kalman
//! filter feeds its innovation — together with:
//!
//! - exact backpropagation through time over warmup + closed-loop rollout
//!   ([`bptt`]), with a finite-difference gradient checker;
//! - an alternating training loop ([`trainer`]) that interleaves Adam steps
//!   with periodic refreshes of the stored innovations;
//! - inference-time warmup/rollout and per-horizon-step error accounting
//!   ([`predictor`]), including the hold-last-value baseline;
//! - CSV ingestion, normalization, segmentation, and splitting ([`data`]);
//! - a stochastic LTI simulator with a steady-state Kalman-filter oracle
//!   ([`synthetic`]) for property-based verification.

pub mod bptt;
pub mod cells;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod numerics;
pub mod predictor;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
