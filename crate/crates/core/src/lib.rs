//! Simulation of entangled-Fock-state cavity networks used as detectors for
//! wave-like dark-photon dark matter.
//!
//! The crate is layered bottom-up:
//!
//! - [`fock`]: truncated multi-mode Fock spaces, operators and states
//! - [`gates`]: beamsplitters and entanglement-distribution circuits
//! - [`drive`]: the stochastic dark-matter drive and its closed forms
//! - [`engine`]: Lindblad propagation, full-tensor and effective single-mode
//! - [`protocol`]: detection cycles, SNR and optimal integration times
//! - [`sensitivity`]: scan rate, exclusion limits and reach bands
//! - [`table`]: CSV and JSON emission of sweep results
//!
//! All internal frequencies and rates are angular (rad/s) and all other
//! quantities are SI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drive;
pub mod engine;
pub mod error;
pub mod fock;
pub mod gates;
pub mod protocol;
pub mod sensitivity;
pub mod table;
pub mod units;

pub use error::{Error, Result};
