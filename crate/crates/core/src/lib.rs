//! Deterministic simulator for an event-driven railway intrusion pipeline.
//!
//! Stages, in the order an event flows through them:
//!
//! - [`sensing`]: PIR + ultrasonic samples, background calibration, event traces
//! - [`fusion`]: weighted PIR/distance fusion and the camera activation gate
//! - [`classify`]: size heuristic, oracle classifier, priority rules, alert gate
//! - [`alerting`]: 31-byte LoRa payload codec, airtime, adaptive SF, ACK/retry, receiver
//! - [`energy`]: watt-hour ledger per platform profile
//! - [`sim`]: discrete-event runner, sweeps, funnel and metrics reports
//!
//! The `netra` binary wraps these behind a small CLI (see [`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alerting;
pub mod classify;
pub mod cli;
pub mod energy;
pub mod error;
pub mod fusion;
pub mod sensing;
pub mod sim;

pub use error::{NetraError, Result};
