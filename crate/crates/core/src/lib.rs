//! Burst-level interference detection and identification (IDI) for the
//! 2.4 GHz ISM band, as seen through the filtered, quantized RSSI register of
//! a constrained 802.15.4 radio.
//!
//! The crate is organised along the processing chain:
//!
//! * [`signal`] synthesises ground truth: channel layouts, transmit masks,
//!   the front-end response, traffic schedules and the RSSI observation chain.
//! * [`sensing`] detects over-threshold bursts and runs the intra-burst
//!   side-channel sampling state machine that yields the eight features.
//! * [`classify`] trains and evaluates the CT1, CT2, RFCT and MSVM classifiers.
//! * [`sf`] is the analytical model of spectral features.
//! * [`traffic`] turns classified bursts into per-technology CDFs and compares
//!   them with the Kolmogorov-Smirnov distance.
//! * [`scenario`] ties everything together behind a declarative config file.

pub mod classify;
pub mod error;
pub mod format;
pub mod label;
pub mod scenario;
pub mod sensing;
pub mod sf;
pub mod signal;
pub mod traffic;

pub use error::{Error, Result};
pub use label::{Class, Label, WifiVariant};
