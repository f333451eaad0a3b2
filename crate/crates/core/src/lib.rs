//! Change detection for long-term IaaS performance signatures.
//!
//! The pipeline follows an event-condition-action loop:
//!
//! * **event**: trial consumers whose experience is dissimilar to the current
//!   signature are anomalies; too many in one trial window raise an event
//!   ([`detection`], [`similarity`]).
//! * **condition**: a CUSUM chart checks the event window's regenerated
//!   signature against the existing one ([`cusum`]).
//! * **action**: a confirmed change splices the regenerated segment into the
//!   signature, and verdict outcomes tune the event threshold ([`adaptation`]).
//!
//! [`sim`] reproduces the evaluation protocol on synthetic or ingested traces.

pub mod adaptation;
pub mod cli;
pub mod config;
pub mod cusum;
pub mod detection;
mod error;
pub mod signature;
pub mod sim;
pub mod similarity;
mod stats;

pub use error::{Error, Result};
